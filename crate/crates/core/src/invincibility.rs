//! Empirical and analytic verification of the invincibility characterisation:
//! opponent-space sampling, (v2, v3) point clouds, counterexample search, and
//! the enumerated D = 0 edge cases.
//!
//! Degenerate pairs are evaluated under two initial distributions, the
//! product-form first round and the all-DD start, mirroring the two first-move
//! prescriptions that exclude the edge cases.

use crate::markov::{
    determinants, initial_distribution, stationary_analytic, stationary_cesaro, CesaroOptions,
    StationaryResult, DEGENERACY_EPSILON,
};
use crate::rng::{derive_seed, unit_draw};
use crate::strategy::{is_invincible, MemoryOneStrategy, PayoffMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// Opponent sampling plan for [`sample_cloud`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GridSpec {
    /// Lattice over `[0,1]^4` with the given step (0.1 gives 14641 points).
    Lattice { step: f64 },
    /// Uniform random opponents, reproducible from the seed.
    Random { n: usize, seed: u64 },
}

/// One sampled opponent with its stationary outcome. Degenerate opponents
/// produce one sample per evaluated initial distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpponentSample {
    pub q: MemoryOneStrategy,
    pub v2: f64,
    pub v3: f64,
    pub s_x: f64,
    pub s_y: f64,
    pub degenerate: bool,
}

/// Cesaro settings for degenerate samples: the burn-in leaves the limit of a
/// reducible chain unchanged (absorbed mass is preserved) but removes the
/// transient, so window averages converge geometrically.
fn degenerate_opts() -> CesaroOptions {
    CesaroOptions {
        max_rounds: 1_000_000,
        tol: 1e-12,
        check_every: 1000,
        burn_in: 10_000,
    }
}

/// Stationary results for a pair: one analytic result for a regular pair, two
/// Cesaro results (product-form start and all-DD start) for a degenerate one.
pub fn evaluate_pair(
    p: &MemoryOneStrategy,
    q: &MemoryOneStrategy,
    payoffs: &PayoffMatrix,
) -> Vec<StationaryResult> {
    let dets = determinants(p, q);
    if dets.d.abs() > DEGENERACY_EPSILON {
        vec![stationary_analytic(p, q, payoffs).expect("non-degenerate pair solves directly")]
    } else {
        let opts = degenerate_opts();
        [initial_distribution(p, q), [0.0, 0.0, 0.0, 1.0]]
            .iter()
            .map(|&init| {
                stationary_cesaro(p, q, payoffs, init, &opts)
                    .expect("degenerate corner chains converge within budget")
            })
            .collect()
    }
}

fn lattice_values(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|i| (i as f64 * step).min(1.0)).collect()
}

fn random_opponent(master: u64, index: u64) -> MemoryOneStrategy {
    let seed = derive_seed(master, index);
    let cond = std::array::from_fn(|j| unit_draw(seed, 0, j as u64, 0));
    MemoryOneStrategy::new(0.5, cond).expect("draws are in [0,1)")
}

/// Stationary `(v2, v3)` and scores for every opponent in the grid, suitable
/// for plotting against the `v2 = v3` diagonal. Degenerate opponents are
/// flagged and evaluated under both initial distributions, never dropped.
/// Opponents carry first move 0.5 so both first-round branches get weight.
pub fn sample_cloud(
    p: &MemoryOneStrategy,
    grid: &GridSpec,
    payoffs: &PayoffMatrix,
) -> Vec<OpponentSample> {
    let opponents: Vec<MemoryOneStrategy> = match grid {
        GridSpec::Lattice { step } => {
            let vals = lattice_values(*step);
            let mut qs = Vec::with_capacity(vals.len().pow(4));
            for &q1 in &vals {
                for &q2 in &vals {
                    for &q3 in &vals {
                        for &q4 in &vals {
                            qs.push(MemoryOneStrategy::new(0.5, [q1, q2, q3, q4]).unwrap());
                        }
                    }
                }
            }
            qs
        }
        GridSpec::Random { n, seed } => (0..*n as u64).map(|i| random_opponent(*seed, i)).collect(),
    };

    opponents
        .par_iter()
        .flat_map_iter(|q| {
            evaluate_pair(p, q, payoffs)
                .into_iter()
                .map(|r| OpponentSample {
                    q: *q,
                    v2: r.v[1],
                    v3: r.v[2],
                    s_x: r.s_x,
                    s_y: r.s_y,
                    degenerate: r.degenerate,
                })
        })
        .collect()
}

/// CSV rows `q1,q2,q3,q4,v2,v3,s_x,s_y,degenerate`.
pub fn write_cloud_csv<W: Write>(samples: &[OpponentSample], out: &mut W) -> io::Result<()> {
    writeln!(out, "q1,q2,q3,q4,v2,v3,s_x,s_y,degenerate")?;
    for s in samples {
        let [q1, q2, q3, q4] = s.q.probs();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            q1, q2, q3, q4, s.v2, s.v3, s.s_x, s.s_y, s.degenerate
        )?;
    }
    Ok(())
}

/// Aggregate view of a cloud: how much of it sits above the diagonal and the
/// worst margins with their witnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudSummary {
    pub schema_version: u32,
    pub samples: usize,
    pub degenerate_samples: usize,
    /// Fraction with `v3 >= v2 - 1e-9`.
    pub fraction_above_diagonal: f64,
    /// Smallest `v3 - v2` over the cloud.
    pub worst_v_margin: f64,
    pub worst_v_witness: MemoryOneStrategy,
    /// Smallest `s_x - s_y` over the cloud.
    pub worst_score_margin: f64,
    pub worst_score_witness: MemoryOneStrategy,
}

pub fn summarize_cloud(samples: &[OpponentSample]) -> CloudSummary {
    assert!(!samples.is_empty());
    let mut above = 0usize;
    let mut worst_v = f64::INFINITY;
    let mut worst_v_witness = samples[0].q;
    let mut worst_s = f64::INFINITY;
    let mut worst_s_witness = samples[0].q;
    for s in samples {
        let vm = s.v3 - s.v2;
        if vm >= -1e-9 {
            above += 1;
        }
        if vm < worst_v {
            worst_v = vm;
            worst_v_witness = s.q;
        }
        let sm = s.s_x - s.s_y;
        if sm < worst_s {
            worst_s = sm;
            worst_s_witness = s.q;
        }
    }
    CloudSummary {
        schema_version: 1,
        samples: samples.len(),
        degenerate_samples: samples.iter().filter(|s| s.degenerate).count(),
        fraction_above_diagonal: above as f64 / samples.len() as f64,
        worst_v_margin: worst_v,
        worst_v_witness,
        worst_score_margin: worst_s,
        worst_score_witness: worst_s_witness,
    }
}

/// A strategy that beats `p`, with the scores that prove it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub q: MemoryOneStrategy,
    pub s_x: f64,
    pub s_y: f64,
}

const WIN_MARGIN: f64 = 1e-9;

fn beats(
    p: &MemoryOneStrategy,
    q: &MemoryOneStrategy,
    payoffs: &PayoffMatrix,
) -> Option<Counterexample> {
    evaluate_pair(p, q, payoffs)
        .into_iter()
        .find(|r| r.s_y > r.s_x + WIN_MARGIN)
        .map(|r| Counterexample {
            q: *q,
            s_x: r.s_x,
            s_y: r.s_y,
        })
}

/// Searches for an opponent with `s_y > s_x + 1e-9`. The two witnesses from
/// the characterisation proofs are tried first: Always Defect beats any
/// `p4 > 0`, and `(0,0,0,1)` beats any `p2 + p3 > 1` with `p4 = 0`. Random
/// search follows up to `budget` opponents.
pub fn find_counterexample(
    p: &MemoryOneStrategy,
    payoffs: &PayoffMatrix,
    budget: usize,
    seed: u64,
) -> Option<Counterexample> {
    let witnesses = [
        MemoryOneStrategy::new(0.0, [0.0, 0.0, 0.0, 0.0]).unwrap(),
        MemoryOneStrategy::new(0.0, [0.0, 0.0, 0.0, 1.0]).unwrap(),
    ];
    for w in &witnesses {
        if let Some(found) = beats(p, w, payoffs) {
            return Some(found);
        }
    }
    for i in 0..budget as u64 {
        let q = random_opponent(seed, i);
        if let Some(found) = beats(p, &q, payoffs) {
            return Some(found);
        }
    }
    None
}

/// The enumerated `D = 0` classifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeCase {
    /// p = (0,0,0,0), Always Defect.
    Case1,
    /// p = (0,0,1,0): cd only ever follows dc.
    Case2,
    /// p = (0,1,0,0): cd can persist.
    Case3,
    /// p = (1,0,0,0), Trigger: cd happens at most once.
    Case4,
    /// p = (1,0,1,0), Tit for Tat.
    Case5,
    /// p = (1,1,0,0), Repeat.
    Case6,
    /// q = (1,1,0,0): the one unilateral D = 0 cause against interior p.
    Case7,
    /// D = 0 without an enumerated pattern.
    GenericDegenerate,
    /// |D| exceeds the degeneracy threshold for this pair.
    NonDegenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Invincible,
    NotInvincible,
    /// Vulnerable only through the first move; defecting first removes it.
    InvincibleWithFirstMoveD,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCaseReport {
    pub case: EdgeCase,
    pub verdict: Verdict,
    /// Whether playing Defect in the first iteration excludes the
    /// vulnerability; true for every enumerated case.
    pub first_move_defect_excludes: bool,
    pub rationale: String,
}

/// Matches the pair against the seven enumerated `D = 0` cases.
///
/// Verdicts depend on the first move where the case does: the cd-lock cases
/// (3 and 6, and generically any `p2 = 1` strategy) lose only when a first
/// Cooperate can reach the lock.
pub fn classify_edge_case(p: &MemoryOneStrategy, q: &MemoryOneStrategy) -> EdgeCaseReport {
    let d = determinants(p, q).d;
    let predicate = is_invincible(p);
    if d.abs() > DEGENERACY_EPSILON {
        return EdgeCaseReport {
            case: EdgeCase::NonDegenerate,
            verdict: if predicate {
                Verdict::Invincible
            } else {
                Verdict::NotInvincible
            },
            first_move_defect_excludes: true,
            rationale: format!(
                "|D| = {:.3e} exceeds the degeneracy threshold; the unique stationary \
                 distribution makes the first move irrelevant",
                d.abs()
            ),
        };
    }

    let first_d = p.first_move() == 0.0;
    let report = |case, verdict, rationale: &str| EdgeCaseReport {
        case,
        verdict,
        first_move_defect_excludes: true,
        rationale: rationale.to_string(),
    };
    let cd_lock_verdict = if first_d {
        Verdict::InvincibleWithFirstMoveD
    } else {
        Verdict::NotInvincible
    };

    match p.probs() {
        [0.0, 0.0, 0.0, 0.0] => report(
            EdgeCase::Case1,
            Verdict::Invincible,
            "Always Defect never trails any opponent",
        ),
        [0.0, 0.0, 1.0, 0.0] => report(
            EdgeCase::Case2,
            Verdict::Invincible,
            "cd can only appear immediately after dc, so the counts balance in the limit",
        ),
        [0.0, 1.0, 0.0, 0.0] => report(
            EdgeCase::Case3,
            cd_lock_verdict,
            "cd is a possible terminal state; a first Cooperate can lock into it",
        ),
        [1.0, 0.0, 0.0, 0.0] => report(
            EdgeCase::Case4,
            Verdict::Invincible,
            "Trigger concedes cd at most once in the whole game",
        ),
        [1.0, 0.0, 1.0, 0.0] => report(
            EdgeCase::Case5,
            Verdict::Invincible,
            "Tit for Tat only reaches cd right after dc (or once at the start)",
        ),
        [1.0, 1.0, 0.0, 0.0] => report(
            EdgeCase::Case6,
            cd_lock_verdict,
            "Repeat echoes its own first move forever; a first Cooperate is exploitable",
        ),
        _ if q.probs() == [1.0, 1.0, 0.0, 0.0] => {
            let verdict = if !predicate {
                Verdict::NotInvincible
            } else if first_d {
                Verdict::InvincibleWithFirstMoveD
            } else {
                Verdict::Invincible
            };
            report(
                EdgeCase::Case7,
                verdict,
                "opponent Repeat sets D = 0 unilaterally; against a first Defect every \
                 outcome becomes dd",
            )
        }
        probs => {
            let verdict = if !predicate {
                Verdict::NotInvincible
            } else if first_d {
                Verdict::InvincibleWithFirstMoveD
            } else if probs[1] < 1.0 {
                Verdict::Invincible
            } else {
                // p2 = 1 keeps cd alive once entered; only a first Defect avoids it
                Verdict::NotInvincible
            };
            report(
                EdgeCase::GenericDegenerate,
                verdict,
                "degenerate without an enumerated pattern; classified by the invincibility \
                 predicate and the first move",
            )
        }
    }
}

/// The sufficiency-proof quantity
/// `L = (1 - p2 - p3)(1 - p1 q1) + (1 - p1) p3 q2 + (1 - p1) p2 q3`,
/// which satisfies `q4 * L = D2 - D3` whenever `p4 = 0`. Non-negative for
/// every opponent exactly when `p2 + p3 <= 1`.
pub fn sufficiency_l(p: &MemoryOneStrategy, q: &MemoryOneStrategy) -> f64 {
    let [p1, p2, p3, _] = p.probs();
    let [q1, q2, q3, _] = q.probs();
    (1.0 - p2 - p3) * (1.0 - p1 * q1) + (1.0 - p1) * p3 * q2 + (1.0 - p1) * p2 * q3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvincibilityReport {
    pub pass: bool,
    /// Smallest `s_x - s_y` seen over all evaluations.
    pub worst_margin: f64,
    pub samples: usize,
    pub degenerate_pairs: usize,
    /// Losing witnesses, capped at eight.
    pub failures: Vec<Counterexample>,
}

/// Samples opponents (uniform random plus all 16 corner strategies plus the
/// two theorem witnesses) and checks `s_x >= s_y - 1e-9` on every
/// non-degenerate pair; degenerate pairs must pass their edge-case verdict
/// and the same margin under both initial distributions.
pub fn verify_invincible_empirically(
    p: &MemoryOneStrategy,
    payoffs: &PayoffMatrix,
    n_samples: usize,
    seed: u64,
) -> InvincibilityReport {
    let mut opponents: Vec<MemoryOneStrategy> = (0..n_samples as u64)
        .map(|i| random_opponent(seed, i))
        .collect();
    for bits in 0..16u32 {
        let cond = std::array::from_fn(|j| ((bits >> j) & 1) as f64);
        opponents.push(MemoryOneStrategy::new(0.5, cond).unwrap());
    }
    opponents.push(MemoryOneStrategy::new(0.0, [0.0, 0.0, 0.0, 0.0]).unwrap());
    opponents.push(MemoryOneStrategy::new(0.0, [0.0, 0.0, 0.0, 1.0]).unwrap());

    let evaluations: Vec<(MemoryOneStrategy, bool, f64, f64, bool)> = opponents
        .par_iter()
        .map(|q| {
            let results = evaluate_pair(p, q, payoffs);
            let degenerate = results[0].degenerate;
            let worst = results
                .iter()
                .min_by(|a, b| (a.s_x - a.s_y).total_cmp(&(b.s_x - b.s_y)))
                .copied()
                .expect("at least one evaluation");
            let verdict_ok =
                !degenerate || classify_edge_case(p, q).verdict != Verdict::NotInvincible;
            (*q, degenerate, worst.s_x, worst.s_y, verdict_ok)
        })
        .collect();

    let mut worst_margin = f64::INFINITY;
    let mut degenerate_pairs = 0;
    let mut failures = Vec::new();
    for (q, degenerate, s_x, s_y, verdict_ok) in &evaluations {
        let margin = s_x - s_y;
        worst_margin = worst_margin.min(margin);
        if *degenerate {
            degenerate_pairs += 1;
        }
        if (margin < -WIN_MARGIN || !verdict_ok) && failures.len() < 8 {
            failures.push(Counterexample {
                q: *q,
                s_x: *s_x,
                s_y: *s_y,
            });
        }
    }
    InvincibilityReport {
        pass: failures.is_empty(),
        worst_margin,
        samples: evaluations.len(),
        degenerate_pairs,
        failures,
    }
}
