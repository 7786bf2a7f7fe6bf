//! Strategies, payoff matrices, and closed-form strategy classifications.
//!
//! A memory-one strategy is a first-move cooperation probability `p0` plus a
//! conditional vector `(p1, p2, p3, p4)` giving the probability of cooperating
//! after each joint outcome of the previous round. Outcomes are always indexed
//! from the strategy owner's perspective, in the fixed order `CC, CD, DC, DD`
//! (first letter: own move, second letter: opponent's move).

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// A single move in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Cooperate,
    Defect,
}

impl Move {
    pub fn is_cooperate(self) -> bool {
        self == Move::Cooperate
    }

    pub fn to_char(self) -> char {
        match self {
            Move::Cooperate => 'C',
            Move::Defect => 'D',
        }
    }
}

/// Joint outcome of one round, seen from one player's perspective.
///
/// The four values are bijective with stationary-vector indices 1..4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Cc,
    Cd,
    Dc,
    Dd,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::Cc, Outcome::Cd, Outcome::Dc, Outcome::Dd];

    pub fn index(self) -> usize {
        match self {
            Outcome::Cc => 0,
            Outcome::Cd => 1,
            Outcome::Dc => 2,
            Outcome::Dd => 3,
        }
    }

    pub fn from_index(i: usize) -> Outcome {
        Self::ALL[i]
    }

    pub fn from_moves(own: Move, theirs: Move) -> Outcome {
        match (own, theirs) {
            (Move::Cooperate, Move::Cooperate) => Outcome::Cc,
            (Move::Cooperate, Move::Defect) => Outcome::Cd,
            (Move::Defect, Move::Cooperate) => Outcome::Dc,
            (Move::Defect, Move::Defect) => Outcome::Dd,
        }
    }

    /// The same joint outcome as seen by the other player (CD and DC swap).
    pub fn swap_perspective(self) -> Outcome {
        match self {
            Outcome::Cd => Outcome::Dc,
            Outcome::Dc => Outcome::Cd,
            other => other,
        }
    }

    pub fn own_move(self) -> Move {
        match self {
            Outcome::Cc | Outcome::Cd => Move::Cooperate,
            Outcome::Dc | Outcome::Dd => Move::Defect,
        }
    }

    pub fn their_move(self) -> Move {
        self.swap_perspective().own_move()
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Outcome::Cc => "CC",
            Outcome::Cd => "CD",
            Outcome::Dc => "DC",
            Outcome::Dd => "DD",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StrategyError {
    /// A probability component of the raw 5-vector `(p0, p1..p4)` is outside [0, 1].
    #[error("strategy component p{index} = {value} is outside [0, 1]")]
    ComponentOutOfRange { index: usize, value: f64 },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PayoffError {
    #[error("payoffs must satisfy T > R > P > S strictly, got T={t} R={r} P={p} S={s}")]
    NotStrictlyOrdered { t: f64, r: f64, p: f64, s: f64 },
    #[error("payoffs must satisfy 2R > T + S strictly, got R={r} T={t} S={s}")]
    CooperationNotDominant { t: f64, r: f64, s: f64 },
    #[error("payoffs must be finite")]
    NotFinite,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExtortionError {
    #[error("extortion factor must satisfy chi >= 1, got {0}")]
    ChiTooSmall(f64),
    #[error("scale must satisfy phi > 0, got {0}")]
    PhiNotPositive(f64),
    /// phi is too large for the given chi and payoffs.
    #[error("computed p{index} = {value} is outside [0, 1]; phi too large for this chi")]
    OutOfRange { index: usize, value: f64 },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseStrategyError {
    #[error("strategy literal must look like `p0:p1,p2,p3,p4`, got {0:?}")]
    BadShape(String),
    #[error("cannot parse number {0:?}")]
    BadNumber(String),
    #[error("division by zero in fraction {0:?}")]
    ZeroDenominator(String),
    #[error(transparent)]
    Invalid(#[from] StrategyError),
}

/// Prisoner's dilemma payoffs `(T, R, P, S)` with the two standard ordering
/// constraints. Payoff vectors against the outcome order `CC, CD, DC, DD` are
/// `S_X = (R, S, T, P)` for the focal player and `S_Y = (R, T, S, P)` for the
/// opponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPayoffs", into = "RawPayoffs")]
pub struct PayoffMatrix {
    t: f64,
    r: f64,
    p: f64,
    s: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPayoffs {
    t: f64,
    r: f64,
    p: f64,
    s: f64,
}

impl TryFrom<RawPayoffs> for PayoffMatrix {
    type Error = PayoffError;
    fn try_from(raw: RawPayoffs) -> Result<Self, Self::Error> {
        PayoffMatrix::new(raw.t, raw.r, raw.p, raw.s)
    }
}

impl From<PayoffMatrix> for RawPayoffs {
    fn from(m: PayoffMatrix) -> Self {
        RawPayoffs {
            t: m.t,
            r: m.r,
            p: m.p,
            s: m.s,
        }
    }
}

impl PayoffMatrix {
    pub fn new(t: f64, r: f64, p: f64, s: f64) -> Result<Self, PayoffError> {
        if ![t, r, p, s].iter().all(|x| x.is_finite()) {
            return Err(PayoffError::NotFinite);
        }
        if !(t > r && r > p && p > s) {
            return Err(PayoffError::NotStrictlyOrdered { t, r, p, s });
        }
        if 2.0 * r <= t + s {
            return Err(PayoffError::CooperationNotDominant { t, r, s });
        }
        Ok(PayoffMatrix { t, r, p, s })
    }

    /// The `(5, 3, 1, 0)` payoffs used throughout the experiments.
    pub fn conventional() -> Self {
        PayoffMatrix {
            t: 5.0,
            r: 3.0,
            p: 1.0,
            s: 0.0,
        }
    }

    /// Donation game with benefit `b` and cost `c`: `(T, R, P, S) = (b, b-c, 0, -c)`.
    pub fn donation(b: f64, c: f64) -> Result<Self, PayoffError> {
        PayoffMatrix::new(b, b - c, 0.0, -c)
    }

    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Focal player's payoff vector over `(CC, CD, DC, DD)`.
    pub fn vector_x(&self) -> [f64; 4] {
        [self.r, self.s, self.t, self.p]
    }

    /// Opponent's payoff vector over the focal player's `(CC, CD, DC, DD)`.
    pub fn vector_y(&self) -> [f64; 4] {
        [self.r, self.t, self.s, self.p]
    }

    /// Per-round payoffs `(focal, opponent)` for an outcome.
    pub fn pair(&self, o: Outcome) -> (f64, f64) {
        (self.vector_x()[o.index()], self.vector_y()[o.index()])
    }
}

impl Default for PayoffMatrix {
    fn default() -> Self {
        PayoffMatrix::conventional()
    }
}

/// A memory-one strategy: first-move cooperation probability plus the
/// conditional cooperation vector over the previous round's outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStrategy", into = "RawStrategy")]
pub struct MemoryOneStrategy {
    first: f64,
    cond: [f64; 4],
}

#[derive(Serialize, Deserialize)]
struct RawStrategy {
    first: f64,
    cond: [f64; 4],
}

impl TryFrom<RawStrategy> for MemoryOneStrategy {
    type Error = StrategyError;
    fn try_from(raw: RawStrategy) -> Result<Self, Self::Error> {
        MemoryOneStrategy::new(raw.first, raw.cond)
    }
}

impl From<MemoryOneStrategy> for RawStrategy {
    fn from(p: MemoryOneStrategy) -> Self {
        RawStrategy {
            first: p.first,
            cond: p.cond,
        }
    }
}

/// Validates a raw 5-vector `(p0, p1, p2, p3, p4)`.
pub fn validate_strategy(raw: [f64; 5]) -> Result<MemoryOneStrategy, StrategyError> {
    for (index, &value) in raw.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(StrategyError::ComponentOutOfRange { index, value });
        }
    }
    Ok(MemoryOneStrategy {
        first: raw[0],
        cond: [raw[1], raw[2], raw[3], raw[4]],
    })
}

impl MemoryOneStrategy {
    pub fn new(first: f64, cond: [f64; 4]) -> Result<Self, StrategyError> {
        validate_strategy([first, cond[0], cond[1], cond[2], cond[3]])
    }

    /// First-move cooperation probability `p0`.
    pub fn first_move(&self) -> f64 {
        self.first
    }

    /// Conditional cooperation probabilities `(p1, p2, p3, p4)`.
    pub fn probs(&self) -> [f64; 4] {
        self.cond
    }

    pub fn prob_after(&self, last: Outcome) -> f64 {
        self.cond[last.index()]
    }

    /// Cooperation probability given the last outcome, or `p0` on round one.
    pub fn cooperation_probability(&self, last: Option<Outcome>) -> f64 {
        match last {
            Some(o) => self.prob_after(o),
            None => self.first,
        }
    }

    /// Press-Dyson vector `(p1 - 1, p2 - 1, p3, p4)`.
    pub fn press_dyson_vector(&self) -> [f64; 4] {
        let [p1, p2, p3, p4] = self.cond;
        [p1 - 1.0, p2 - 1.0, p3, p4]
    }

    /// Same conditional vector with a different first move.
    pub fn with_first_move(&self, first: f64) -> Result<Self, StrategyError> {
        MemoryOneStrategy::new(first, self.cond)
    }
}

impl fmt::Display for MemoryOneStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [p1, p2, p3, p4] = self.cond;
        write!(f, "{}:{},{},{},{}", self.first, p1, p2, p3, p4)
    }
}

/// Parses one number, accepting plain decimals and fractions like `11/13`.
fn parse_prob(token: &str) -> Result<f64, ParseStrategyError> {
    let token = token.trim();
    if let Some((num, den)) = token.split_once('/') {
        let n: f64 = num
            .trim()
            .parse()
            .map_err(|_| ParseStrategyError::BadNumber(token.into()))?;
        let d: f64 = den
            .trim()
            .parse()
            .map_err(|_| ParseStrategyError::BadNumber(token.into()))?;
        if d == 0.0 {
            return Err(ParseStrategyError::ZeroDenominator(token.into()));
        }
        Ok(n / d)
    } else {
        token
            .parse()
            .map_err(|_| ParseStrategyError::BadNumber(token.into()))
    }
}

impl FromStr for MemoryOneStrategy {
    type Err = ParseStrategyError;

    /// Parses the `p0:p1,p2,p3,p4` literal, e.g. `0:1,0.7,0.2,0` or
    /// `0:11/13,1/2,7/26,0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, tail) = s
            .split_once(':')
            .ok_or_else(|| ParseStrategyError::BadShape(s.into()))?;
        let first = parse_prob(head)?;
        let parts: Vec<&str> = tail.split(',').collect();
        if parts.len() != 4 {
            return Err(ParseStrategyError::BadShape(s.into()));
        }
        let mut cond = [0.0; 4];
        for (i, part) in parts.iter().enumerate() {
            cond[i] = parse_prob(part)?;
        }
        Ok(MemoryOneStrategy::new(first, cond)?)
    }
}

/// Extortion parameters: factor `chi >= 1` and scale `phi > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtortionParams {
    chi: f64,
    phi: f64,
}

impl ExtortionParams {
    pub fn new(chi: f64, phi: f64) -> Result<Self, ExtortionError> {
        // NaN is rejected along with the range violations
        if chi.is_nan() || chi < 1.0 {
            return Err(ExtortionError::ChiTooSmall(chi));
        }
        if phi.is_nan() || phi <= 0.0 {
            return Err(ExtortionError::PhiNotPositive(phi));
        }
        Ok(ExtortionParams { chi, phi })
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Weights of a linear score combination `alpha*sX + beta*sY + gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZdCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ZdCoefficients {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Option<Self> {
        if alpha == 0.0 && beta == 0.0 && gamma == 0.0 {
            return None;
        }
        Some(ZdCoefficients { alpha, beta, gamma })
    }

    /// The vector `alpha*S_X + beta*S_Y + gamma*1` a zero-determinant strategy
    /// would equate its Press-Dyson vector to.
    pub fn target_vector(&self, payoffs: &PayoffMatrix) -> [f64; 4] {
        let sx = payoffs.vector_x();
        let sy = payoffs.vector_y();
        std::array::from_fn(|i| self.alpha * sx[i] + self.beta * sy[i] + self.gamma)
    }
}

/// True iff `p4 = 0` and `p2 + p3 <= 1` (exact comparisons on stored values).
///
/// This is the closed-form characterisation of strategies that never score
/// below any memory-one opponent in limit-average payoff. The predicate is a
/// property of the conditional vector alone; degenerate first-move effects are
/// handled by [`crate::invincibility::classify_edge_case`].
pub fn is_invincible(p: &MemoryOneStrategy) -> bool {
    let [_, p2, p3, p4] = p.probs();
    p4 == 0.0 && p2 + p3 <= 1.0
}

/// True iff the strategy plays C first, `0.5 < p1 < 1`, and is invincible.
///
/// Such strategies act as cooperation catalysts in evolving populations.
pub fn is_semi_cooperative_invincible(p: &MemoryOneStrategy) -> bool {
    let [p1, _, _, _] = p.probs();
    p.first_move() == 1.0 && 0.5 < p1 && p1 < 1.0 && is_invincible(p)
}

/// Builds the extortionate strategy with factor `chi` and scale `phi`:
///
/// ```text
/// p1 = 1 - phi*(chi-1)*(R-P)/(P-S)     p2 = 1 - phi*(1 + chi*(T-P)/(P-S))
/// p3 = phi*(chi + (T-P)/(P-S))         p4 = 0
/// ```
///
/// forcing `sX - P = chi * (sY - P)` against every opponent. The first move is
/// D: playing Defect in the first iteration excludes all degenerate edge
/// cases. Errors if any component leaves [0, 1] (phi too large).
pub fn make_extortionate(
    params: ExtortionParams,
    payoffs: &PayoffMatrix,
) -> Result<MemoryOneStrategy, ExtortionError> {
    let (chi, phi) = (params.chi(), params.phi());
    let (t, r, p, s) = (payoffs.t(), payoffs.r(), payoffs.p(), payoffs.s());
    let rp = (r - p) / (p - s);
    let tp = (t - p) / (p - s);
    let cond = [
        1.0 - phi * (chi - 1.0) * rp,
        1.0 - phi * (1.0 + chi * tp),
        phi * (chi + tp),
        0.0,
    ];
    for (i, &value) in cond.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(ExtortionError::OutOfRange {
                index: i + 1,
                value,
            });
        }
    }
    Ok(MemoryOneStrategy { first: 0.0, cond })
}

/// Left-hand side of the zero-determinant hyperplane condition for payoffs
/// `(R, S, T, P) = (3, 0, 5, 1)`: `3*p1 - 2*p2 - 2*p3 + p4 - 1`.
///
/// Zero-determinant strategies under those payoffs satisfy this exactly. For
/// that payoff matrix `(3, -2, -2, 1)` is orthogonal to `S_X`, `S_Y`, and `1`,
/// so the value equals `sqrt(18)` times the distance from the Press-Dyson
/// vector to their span.
pub fn corollary_residual(p: &MemoryOneStrategy) -> f64 {
    let [p1, p2, p3, p4] = p.probs();
    (3.0 * p1 - 2.0 * p2 - 2.0 * p3 + p4 - 1.0).abs()
}

/// Euclidean distance from the Press-Dyson vector `(p1-1, p2-1, p3, p4)` to
/// `span{S_X, S_Y, 1}` (least-squares projection residual).
pub fn zd_distance(p: &MemoryOneStrategy, payoffs: &PayoffMatrix) -> f64 {
    let basis = [payoffs.vector_x(), payoffs.vector_y(), [1.0; 4]];
    let mut ortho: Vec<[f64; 4]> = Vec::new();
    for b in basis {
        let mut v = b;
        for e in &ortho {
            let d = dot(&v, e);
            for i in 0..4 {
                v[i] -= d * e[i];
            }
        }
        let n = dot(&v, &v).sqrt();
        if n > 1e-12 {
            for x in &mut v {
                *x /= n;
            }
            ortho.push(v);
        }
    }
    let mut res = p.press_dyson_vector();
    for e in &ortho {
        let d = dot(&res, e);
        for i in 0..4 {
            res[i] -= d * e[i];
        }
    }
    dot(&res, &res).sqrt()
}

/// True iff the Press-Dyson vector lies within `tol` of `span{S_X, S_Y, 1}`.
pub fn is_zero_determinant(p: &MemoryOneStrategy, payoffs: &PayoffMatrix, tol: f64) -> bool {
    zd_distance(p, payoffs) <= tol
}

/// Least-squares fit of `(chi, phi)` such that the Press-Dyson vector equals
/// `phi*[(S_X - P*1) - chi*(S_Y - P*1)]`. Returns `(chi, phi, residual)` when
/// the fitted parameters are admissible (`phi > 0`, `chi >= 1`).
pub fn extortion_fit(p: &MemoryOneStrategy, payoffs: &PayoffMatrix) -> Option<(f64, f64, f64)> {
    let pv = p.press_dyson_vector();
    let pp = payoffs.p();
    let u: [f64; 4] = std::array::from_fn(|i| payoffs.vector_x()[i] - pp);
    let w: [f64; 4] = std::array::from_fn(|i| payoffs.vector_y()[i] - pp);
    // minimise |a*u - b*w - pv|^2 over (a, b) = (phi, phi*chi)
    let (uu, ww, uw) = (dot(&u, &u), dot(&w, &w), dot(&u, &w));
    let (up, wp) = (dot(&u, &pv), dot(&w, &pv));
    let det = uu * ww - uw * uw;
    if det.abs() < 1e-12 {
        return None;
    }
    let a = (up * ww - uw * wp) / det;
    let b = (uw * up - uu * wp) / det;
    let mut res = [0.0; 4];
    for i in 0..4 {
        res[i] = a * u[i] - b * w[i] - pv[i];
    }
    let residual = dot(&res, &res).sqrt();
    if a <= 0.0 {
        return None;
    }
    let (phi, chi) = (a, b / a);
    if chi < 1.0 - 1e-9 {
        return None;
    }
    Some((chi, phi, residual))
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
