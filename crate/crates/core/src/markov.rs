//! Markov analysis of a memory-one strategy pair: the 4x4 transition matrix,
//! the determinants behind the stationary distribution, and long-run scores
//! computed both analytically and by Cesaro-averaged iteration.
//!
//! For strategies `p` (player X) and `q` (player Y) the round outcomes form a
//! Markov chain over `(CC, CD, DC, DD)` (X's perspective) with row-stochastic
//! transition matrix
//!
//! ```text
//!     | p1*q1  p1*(1-q1)  (1-p1)*q1  (1-p1)*(1-q1) |
//! M = | p2*q3  p2*(1-q3)  (1-p2)*q3  (1-p2)*(1-q3) |
//!     | p3*q2  p3*(1-q2)  (1-p3)*q2  (1-p3)*(1-q2) |
//!     | p4*q4  p4*(1-q4)  (1-p4)*q4  (1-p4)*(1-q4) |
//! ```
//!
//! Rows 2 and 3 use `q3` and `q2` because Y sees the states CD and DC with
//! roles swapped. A stationary distribution `v M = v`, `sum(v) = 1` solves
//!
//! ```text
//! | p1-1     p2-1    p3      p4     |       | 0 |
//! | q1-1     q3      q2-1    q4     |  v  = | 0 |
//! | p1*q1-1  p2*q3   p3*q2   p4*q4  |       | 0 |
//! | 1        1       1       1      |       | 1 |
//! ```
//!
//! whose determinant `D` is at most zero for all strategy pairs. When `D != 0`
//! the solution is unique and Cramer's rule gives `v2 = D2/D`, `v3 = D3/D`.
//! When `D = 0` the long-run distribution depends on the initial one and is
//! defined as the limit of the Cesaro averages `(1/n) * sum(v^1..v^n)`, which
//! always exists even when the raw sequence cycles.

use crate::linalg::{det4, solve4};
use crate::strategy::{MemoryOneStrategy, PayoffMatrix};
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

/// Degeneracy threshold on `|D|`: below it the chain is treated as having a
/// non-unique stationary distribution and the Cesaro fallback is used.
/// Determinant magnitudes for interior strategies are O(1e-2..1); true `D = 0`
/// comes from corner-valued components.
pub const DEGENERACY_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Error)]
pub enum MarkovError {
    /// The Cesaro average failed to meet its tolerance within the round budget.
    #[error(
        "cesaro average did not converge: gap {gap:.3e} after {rounds} rounds (tol {tol:.1e})"
    )]
    NonConvergent {
        gap: f64,
        tol: f64,
        rounds: usize,
        last: [f64; 4],
    },
}

/// Row-stochastic transition matrix over `(CC, CD, DC, DD)`; rows index the
/// source state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix([[f64; 4]; 4]);

impl TransitionMatrix {
    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.0
    }

    /// Propagates a distribution one round: `v' = v M`.
    pub fn step(&self, v: [f64; 4]) -> [f64; 4] {
        let m = &self.0;
        [
            v[0] * m[0][0] + v[1] * m[1][0] + v[2] * m[2][0] + v[3] * m[3][0],
            v[0] * m[0][1] + v[1] * m[1][1] + v[2] * m[2][1] + v[3] * m[3][1],
            v[0] * m[0][2] + v[1] * m[1][2] + v[2] * m[2][2] + v[3] * m[3][2],
            v[0] * m[0][3] + v[1] * m[1][3] + v[2] * m[2][3] + v[3] * m[3][3],
        ]
    }
}

/// Builds the transition matrix for the pair `(p, q)`.
pub fn build_matrix(p: &MemoryOneStrategy, q: &MemoryOneStrategy) -> TransitionMatrix {
    let pp = p.probs();
    let qq = q.probs();
    // Y's cooperation probability out of X-state i: Y sees CD as DC and vice versa.
    let qy = [qq[0], qq[2], qq[1], qq[3]];
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        let (pc, qc) = (pp[i], qy[i]);
        *row = [
            pc * qc,
            pc * (1.0 - qc),
            (1.0 - pc) * qc,
            (1.0 - pc) * (1.0 - qc),
        ];
    }
    TransitionMatrix(m)
}

/// Distribution of the first round: `(p0*q0, p0*(1-q0), (1-p0)*q0, (1-p0)*(1-q0))`.
pub fn initial_distribution(p: &MemoryOneStrategy, q: &MemoryOneStrategy) -> [f64; 4] {
    let (a, b) = (p.first_move(), q.first_move());
    [a * b, a * (1.0 - b), (1.0 - a) * b, (1.0 - a) * (1.0 - b)]
}

/// The stationary-system matrix displayed above.
fn system_matrix(p: &MemoryOneStrategy, q: &MemoryOneStrategy) -> [[f64; 4]; 4] {
    let [p1, p2, p3, p4] = p.probs();
    let [q1, q2, q3, q4] = q.probs();
    [
        [p1 - 1.0, p2 - 1.0, p3, p4],
        [q1 - 1.0, q3, q2 - 1.0, q4],
        [p1 * q1 - 1.0, p2 * q3, p3 * q2, p4 * q4],
        [1.0, 1.0, 1.0, 1.0],
    ]
}

/// The determinants `D`, `D2`, `D3` of the stationary system. `D <= 0` always;
/// `D2` and `D3` replace the second and third column by the right-hand side,
/// so `v2 = D2/D` and `v3 = D3/D` whenever `D != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Determinants {
    pub d: f64,
    pub d2: f64,
    pub d3: f64,
}

pub fn determinants(p: &MemoryOneStrategy, q: &MemoryOneStrategy) -> Determinants {
    let a = system_matrix(p, q);
    let rhs = [0.0, 0.0, 0.0, 1.0];
    let mut a2 = a;
    let mut a3 = a;
    for i in 0..4 {
        a2[i][1] = rhs[i];
        a3[i][2] = rhs[i];
    }
    Determinants {
        d: det4(&a),
        d2: det4(&a2),
        d3: det4(&a3),
    }
}

/// The Press-Dyson determinant `D(p, q, f)`: the dot product of an arbitrary
/// four-vector `f` with the unnormalised stationary vector,
///
/// ```text
///              | p1*q1-1  p1-1  q1-1  f1 |
/// D(p, q, f) = | p2*q3    p2-1  q3    f2 |
///              | p3*q2    p3    q2-1  f3 |
///              | p4*q4    p4    q4    f4 |
/// ```
///
/// so that `(v.f)/(v.1) = D(p,q,f)/D(p,q,1)`. `D(p, q, 1)` equals the system
/// determinant `D`.
pub fn press_dyson_dot(p: &MemoryOneStrategy, q: &MemoryOneStrategy, f: [f64; 4]) -> f64 {
    let [p1, p2, p3, p4] = p.probs();
    let [q1, q2, q3, q4] = q.probs();
    let m = [
        [p1 * q1 - 1.0, p1 - 1.0, q1 - 1.0, f[0]],
        [p2 * q3, p2 - 1.0, q3, f[1]],
        [p3 * q2, p3, q2 - 1.0, f[2]],
        [p4 * q4, p4, q4, f[3]],
    ];
    det4(&m)
}

/// Residual of the orthogonality between a stationary distribution and X's
/// Press-Dyson vector: `|v1*(p1-1) + v2*(p2-1) + v3*p3 + v4*p4|`.
///
/// Exactly zero for any true stationary distribution (the limit-average
/// cooperation rate of X must balance); converged solver output keeps it
/// below 1e-8.
pub fn akin_residual(p: &MemoryOneStrategy, v: &[f64; 4]) -> f64 {
    let pv = p.press_dyson_vector();
    (v[0] * pv[0] + v[1] * pv[1] + v[2] * pv[2] + v[3] * pv[3]).abs()
}

/// How a stationary result was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Analytic,
    Cesaro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryResult {
    /// Stationary distribution over `(CC, CD, DC, DD)`.
    pub v: [f64; 4],
    pub dets: Determinants,
    /// Long-run scores `sX = v.S_X`, `sY = v.S_Y`.
    pub s_x: f64,
    pub s_y: f64,
    pub method: Method,
    /// True when `|D| <= DEGENERACY_EPSILON`, i.e. the distribution depends on
    /// the initial one. Cesaro results then report the limit for the initial
    /// distribution they were started from.
    pub degenerate: bool,
}

fn clamp_normalize(mut v: [f64; 4]) -> [f64; 4] {
    for x in &mut v {
        // also canonicalizes -0.0
        if *x <= 0.0 {
            *x = 0.0;
        }
    }
    let sum: f64 = v.iter().sum();
    for x in &mut v {
        *x /= sum;
    }
    v
}

fn scores(v: &[f64; 4], payoffs: &PayoffMatrix) -> (f64, f64) {
    let sx = payoffs.vector_x();
    let sy = payoffs.vector_y();
    let a = v.iter().zip(sx).map(|(a, b)| a * b).sum();
    let b = v.iter().zip(sy).map(|(a, b)| a * b).sum();
    (a, b)
}

/// Stationary distribution and scores via the linear system.
///
/// When `|D| > DEGENERACY_EPSILON` the unique `v` is obtained from the pivoted
/// solve of the displayed system (better conditioned than four Cramer
/// expansions); `v2` and `v3` agree with `D2/D` and `D3/D`. Otherwise the
/// result is the Cesaro limit started from [`initial_distribution`], flagged
/// degenerate.
pub fn stationary_analytic(
    p: &MemoryOneStrategy,
    q: &MemoryOneStrategy,
    payoffs: &PayoffMatrix,
) -> Result<StationaryResult, MarkovError> {
    let dets = determinants(p, q);
    if dets.d.abs() > DEGENERACY_EPSILON {
        let a = system_matrix(p, q);
        let v = solve4(&a, &[0.0, 0.0, 0.0, 1.0]).expect("|D| > 0 guarantees a pivot");
        let v = clamp_normalize(v);
        debug_assert!((v[1] * dets.d - dets.d2).abs() <= 1e-9 * dets.d.abs().max(1.0));
        debug_assert!((v[2] * dets.d - dets.d3).abs() <= 1e-9 * dets.d.abs().max(1.0));
        let (s_x, s_y) = scores(&v, payoffs);
        Ok(StationaryResult {
            v,
            dets,
            s_x,
            s_y,
            method: Method::Analytic,
            degenerate: false,
        })
    } else {
        let init = initial_distribution(p, q);
        stationary_cesaro(p, q, payoffs, init, &CesaroOptions::default())
    }
}

/// Controls for the Cesaro iteration.
///
/// Convergence compares successive running averages `A_n` and `A_{n-1}` in
/// max-norm, measured every `check_every` rounds. Small-period cycles average
/// out quickly; near-degenerate chains need the long default budget.
///
/// `burn_in` discards that many rounds before averaging starts. The Cesaro
/// limit of any tail of the sequence is the same, but skipping the transient
/// removes the O(1/n) bias it leaves in the running average, which is the
/// difference between ~1e-5 and ~1e-9 accuracy within the same budget. The
/// default of zero averages from round one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CesaroOptions {
    pub max_rounds: usize,
    pub tol: f64,
    pub check_every: usize,
    pub burn_in: usize,
}

impl Default for CesaroOptions {
    fn default() -> Self {
        CesaroOptions {
            max_rounds: 1_000_000,
            tol: 1e-10,
            check_every: 1000,
            burn_in: 0,
        }
    }
}

impl CesaroOptions {
    /// Settings for cross-checking against the analytic solver: the burn-in
    /// suppresses the initial transient so the window average converges
    /// geometrically for mixing chains.
    pub fn oracle() -> Self {
        CesaroOptions {
            max_rounds: 2_000_000,
            tol: 1e-12,
            check_every: 1000,
            burn_in: 100_000,
        }
    }
}

/// Long-run distribution as the limit of Cesaro averages `(1/n) sum v^k`,
/// iterating `v^{r+1} = v^r M` from `initial`.
///
/// Stops when successive running averages differ by less than `opts.tol` in
/// max-norm (checked every `opts.check_every` rounds) and errors with the last
/// average and gap if the budget runs out. The average payoff reported is the
/// limit-of-averages score `v.S`.
pub fn stationary_cesaro(
    p: &MemoryOneStrategy,
    q: &MemoryOneStrategy,
    payoffs: &PayoffMatrix,
    initial: [f64; 4],
    opts: &CesaroOptions,
) -> Result<StationaryResult, MarkovError> {
    debug_assert!((initial.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let m = build_matrix(p, q);
    let dets = determinants(p, q);
    let degenerate = dets.d.abs() <= DEGENERACY_EPSILON;

    let mut v = initial;
    for _ in 0..opts.burn_in {
        v = m.step(v);
    }
    let mut avg = v;
    let mut checkpoint = avg;
    let mut checkpoint_round = 1usize;
    let mut converged = false;
    let mut gap = f64::INFINITY;
    let mut rounds = 1;
    for r in 2..=opts.max_rounds {
        v = m.step(v);
        let inv = 1.0 / r as f64;
        for i in 0..4 {
            avg[i] += (v[i] - avg[i]) * inv;
        }
        rounds = r;
        if r % opts.check_every == 0 {
            // per-step drift of the running average since the last checkpoint;
            // exact cycles with period dividing the window contribute zero
            let window = (r - checkpoint_round) as f64;
            gap = avg
                .iter()
                .zip(&checkpoint)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / window;
            checkpoint = avg;
            checkpoint_round = r;
            if gap < opts.tol {
                converged = true;
                break;
            }
        }
    }
    if !converged && opts.max_rounds > 1 {
        return Err(MarkovError::NonConvergent {
            gap,
            tol: opts.tol,
            rounds,
            last: avg,
        });
    }
    let v = clamp_normalize(avg);
    let (s_x, s_y) = scores(&v, payoffs);
    Ok(StationaryResult {
        v,
        dets,
        s_x,
        s_y,
        method: Method::Cesaro,
        degenerate,
    })
}

/// Streams one CSV row per strategy pair. Columns, in order:
/// `p0,p1,p2,p3,p4,q0,q1,q2,q3,q4,D,D2,D3,v1,v2,v3,v4,s_x,s_y,method,degenerate`.
pub fn write_batch_csv<'a, I, W>(pairs: I, payoffs: &PayoffMatrix, out: &mut W) -> io::Result<()>
where
    I: IntoIterator<Item = &'a (MemoryOneStrategy, MemoryOneStrategy)>,
    W: Write,
{
    writeln!(
        out,
        "p0,p1,p2,p3,p4,q0,q1,q2,q3,q4,D,D2,D3,v1,v2,v3,v4,s_x,s_y,method,degenerate"
    )?;
    for (p, q) in pairs {
        let r = stationary_analytic(p, q, payoffs).map_err(|e| io::Error::other(e.to_string()))?;
        let [p1, p2, p3, p4] = p.probs();
        let [q1, q2, q3, q4] = q.probs();
        let method = match r.method {
            Method::Analytic => "analytic",
            Method::Cesaro => "cesaro",
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.first_move(),
            p1,
            p2,
            p3,
            p4,
            q.first_move(),
            q1,
            q2,
            q3,
            q4,
            r.dets.d,
            r.dets.d2,
            r.dets.d3,
            r.v[0],
            r.v[1],
            r.v[2],
            r.v[3],
            r.s_x,
            r.s_y,
            method,
            r.degenerate
        )?;
    }
    Ok(())
}

/// Corner matrix of the stationary system for `(p, q)` components in {0, 1},
/// with exact integer entries. Used to check `D <= 0` free of floating point.
pub fn corner_system_matrix(p_bits: [i64; 4], q_bits: [i64; 4]) -> [[i64; 4]; 4] {
    let [p1, p2, p3, p4] = p_bits;
    let [q1, q2, q3, q4] = q_bits;
    [
        [p1 - 1, p2 - 1, p3, p4],
        [q1 - 1, q3, q2 - 1, q4],
        [p1 * q1 - 1, p2 * q3, p3 * q2, p4 * q4],
        [1, 1, 1, 1],
    ]
}

/// Exact corner determinant, see [`corner_system_matrix`].
pub fn corner_determinant(p_bits: [i64; 4], q_bits: [i64; 4]) -> i64 {
    crate::linalg::det4_exact(&corner_system_matrix(p_bits, q_bits))
}
