//! Command-line front end: strategy classification, pair analysis, opponent
//! clouds, counterexample search, tournaments, Moran evolution, and the
//! verification suites.
//!
//! Machine output (JSON or CSV) goes to stdout or `--out`; human-readable
//! summaries go to stderr. Every JSON document carries `schema_version` and an
//! echo of the effective configuration, seeds included. Exit codes: 0 on
//! success, 1 when a verification suite reports failures, 2 on usage errors.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ipd::evolution::{MoranProcess, Scenario};
use ipd::invincibility::{
    classify_edge_case, find_counterexample, sample_cloud, summarize_cloud, write_cloud_csv,
    GridSpec,
};
use ipd::tournament::{
    convergence_trace, parse_roster, run_tournament, write_trajectory_csv, MatchConfig,
    TournamentConfig,
};
use ipd::verify::{run_suite, Scale};
use ipd::{
    corollary_residual, extortion_fit, is_invincible, is_semi_cooperative_invincible,
    stationary_analytic, zd_distance, MemoryOneStrategy, Method, PayoffMatrix, RuleSpec,
};
use serde_json::json;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const SCHEMA_VERSION: u32 = 1;

fn parse_payoffs(s: &str) -> Result<PayoffMatrix, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected T,R,P,S, got {s:?}"));
    }
    let mut vals = [0.0; 4];
    for (i, part) in parts.iter().enumerate() {
        vals[i] = part
            .parse()
            .map_err(|_| format!("cannot parse payoff {part:?}"))?;
    }
    PayoffMatrix::new(vals[0], vals[1], vals[2], vals[3]).map_err(|e| e.to_string())
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Payoffs as T,R,P,S
    #[arg(long, value_parser = parse_payoffs, default_value = "5,3,1,0", global = true)]
    payoffs: PayoffMatrix,
    /// Master seed; defaults to $IPD_SEED, then 0
    #[arg(long, global = true)]
    seed: Option<u64>,
}

impl Common {
    fn seed(&self) -> u64 {
        self.seed
            .or_else(|| std::env::var("IPD_SEED").ok().and_then(|s| s.parse().ok()))
            .unwrap_or(0)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ipd",
    version,
    about = "Memory-one strategy analysis for the iterated prisoner's dilemma"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a strategy literal (`p0:p1,p2,p3,p4`, fractions allowed) or catalog name
    Classify { strategy: String },
    /// Stationary analysis of a pair, or batch CSV over a pair file
    Analyze {
        /// Focal strategy (literal or catalog name)
        p: Option<String>,
        /// Opponent strategy
        q: Option<String>,
        /// File of `P Q` pairs, one per line (`-` for stdin); emits batch CSV
        #[arg(long)]
        batch: Option<PathBuf>,
        /// Also write the running distribution of a simulated match as CSV
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Rounds for the simulated trace
        #[arg(long, default_value_t = 1000)]
        rounds: u32,
    },
    /// Stationary (v2, v3) cloud over sampled opponents, as CSV
    Cloud {
        p: String,
        /// Lattice step over the opponent cube
        #[arg(long, conflicts_with = "random")]
        step: Option<f64>,
        /// Number of uniform random opponents instead of a lattice
        #[arg(long)]
        random: Option<usize>,
        /// CSV destination (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON summary destination
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Search for an opponent that beats the strategy
    Counterexample {
        p: String,
        /// Random opponents to try after the two theorem witnesses
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
    /// Round-robin tournament over a roster (default: the built-in catalog)
    Tournament {
        /// Roster file: one catalog name or literal per line
        #[arg(long)]
        roster: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        rounds: u32,
        /// Seed replicates per pairing
        #[arg(long = "seeds", default_value_t = 10)]
        replicates: u32,
        /// Report destination (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moran-process evolution from a scenario file
    Evolve {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's step budget
        #[arg(long)]
        steps: Option<usize>,
        /// Independent replicate runs
        #[arg(long, default_value_t = 1)]
        runs: u32,
        /// Trace CSV of the first run
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite: theorem1, theorem2, theorem4, theorem5, akin, oracle, all
    Verify {
        suite: String,
        /// `small` for a quick pass, `full` for acceptance scale
        #[arg(long, default_value = "full")]
        scale: String,
    },
}

/// Usage-level failure: bad literals, unreadable files, unknown names.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

fn parse_strategy(s: &str) -> Result<MemoryOneStrategy> {
    if let Some(named) = ipd::lookup(s) {
        if let Some(p) = named.rule.memory_one() {
            return Ok(*p);
        }
        return usage(format!("{s:?} is not a memory-one strategy"));
    }
    match s.parse() {
        Ok(p) => Ok(p),
        Err(e) => usage(format!("cannot parse strategy {s:?}: {e}")),
    }
}

fn write_out(path: &Option<PathBuf>, contents: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, contents).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(contents)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let payoffs = cli.common.payoffs;
    let seed = cli.common.seed();
    match cli.command {
        Command::Classify { strategy } => {
            let p = parse_strategy(&strategy)?;
            let [_, p2, _, _] = p.probs();
            let vector_invincible = is_invincible(&p);
            // a cooperative first move is exploitable exactly when p2 = 1
            // (the cd state can lock); defecting first removes the exposure
            let first_move_safe = p.first_move() == 0.0 || p2 < 1.0;
            let extortionate = extortion_fit(&p, &payoffs)
                .filter(|(_, _, residual)| *residual < 1e-9)
                .map(|(chi, phi, residual)| json!({"chi": chi, "phi": phi, "residual": residual}));
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "config": {"strategy": strategy, "payoffs": payoffs},
                "strategy": p,
                "invincible": vector_invincible && first_move_safe,
                "invincible_vector_condition": vector_invincible,
                "first_move_safe": first_move_safe,
                "semi_cooperative_invincible": is_semi_cooperative_invincible(&p),
                "zero_determinant": ipd::is_zero_determinant(&p, &payoffs, 1e-9),
                "zd_distance": zd_distance(&p, &payoffs),
                "corollary_residual": corollary_residual(&p),
                "extortionate": extortionate,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(ExitCode::SUCCESS)
        }

        Command::Analyze {
            p,
            q,
            batch,
            trace,
            rounds,
        } => {
            if let Some(path) = batch {
                let text = if path.as_os_str() == "-" {
                    std::io::read_to_string(std::io::stdin())?
                } else {
                    fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))
                        .map_err(|e| UsageError(format!("{e:#}")))?
                };
                let mut pairs = Vec::new();
                for line in text.lines().map(str::trim) {
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let mut it = line.split_whitespace();
                    match (it.next(), it.next()) {
                        (Some(a), Some(b)) => pairs.push((parse_strategy(a)?, parse_strategy(b)?)),
                        _ => return usage(format!("batch line needs two strategies: {line:?}")),
                    }
                }
                let mut out = Vec::new();
                ipd::markov::write_batch_csv(&pairs, &payoffs, &mut out)?;
                std::io::stdout().write_all(&out)?;
                eprintln!("# analyzed {} pairs (payoffs {:?})", pairs.len(), payoffs);
                return Ok(ExitCode::SUCCESS);
            }

            let (Some(p), Some(q)) = (p, q) else {
                return usage("analyze needs two strategies (or --batch FILE)");
            };
            let pm = parse_strategy(&p)?;
            let qm = parse_strategy(&q)?;
            let result = stationary_analytic(&pm, &qm, &payoffs)?;
            let winner = if (result.s_x - result.s_y).abs() <= 1e-12 {
                "tie"
            } else if result.s_x > result.s_y {
                "X"
            } else {
                "Y"
            };
            let edge = classify_edge_case(&pm, &qm);
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "config": {"p": p, "q": q, "payoffs": payoffs, "seed": seed},
                "result": result,
                "winner": winner,
                "edge_case": edge,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            if let Some(path) = trace {
                let cfg = MatchConfig {
                    rounds,
                    seed,
                    match_id: 0,
                    payoffs,
                    record_trajectory: true,
                };
                let traj =
                    convergence_trace(&RuleSpec::MemoryOne(pm), &RuleSpec::MemoryOne(qm), &cfg);
                let mut out = Vec::new();
                write_trajectory_csv(&traj, &mut out)?;
                fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
                eprintln!(
                    "# trace of {rounds} rounds (seed {seed}) written to {}",
                    path.display()
                );
            }
            match result.method {
                Method::Analytic => eprintln!("# unique stationary distribution (analytic solve)"),
                Method::Cesaro => {
                    eprintln!("# degenerate pair: Cesaro average from the first-round distribution")
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Cloud {
            p,
            step,
            random,
            out,
            summary,
        } => {
            let pm = parse_strategy(&p)?;
            let grid = match (step, random) {
                (Some(h), None) => {
                    if !(h > 0.0 && h <= 1.0) {
                        return usage(format!("lattice step must be in (0, 1], got {h}"));
                    }
                    GridSpec::Lattice { step: h }
                }
                (None, Some(n)) => GridSpec::Random { n, seed },
                (None, None) => GridSpec::Lattice { step: 0.1 },
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            };
            eprintln!("# cloud for {pm} over {grid:?}, payoffs {payoffs:?}");
            let samples = sample_cloud(&pm, &grid, &payoffs);
            let mut csv = Vec::new();
            write_cloud_csv(&samples, &mut csv)?;
            write_out(&out, &csv)?;
            let digest = summarize_cloud(&samples);
            if let Some(path) = summary {
                let doc = json!({
                    "schema_version": SCHEMA_VERSION,
                    "config": {"p": p, "grid": grid, "payoffs": payoffs, "seed": seed},
                    "summary": digest,
                });
                fs::write(&path, serde_json::to_string_pretty(&doc)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            eprintln!(
                "# {} samples ({} degenerate), fraction above diagonal {:.6}, worst v3-v2 {:.3e}",
                digest.samples,
                digest.degenerate_samples,
                digest.fraction_above_diagonal,
                digest.worst_v_margin
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Counterexample { p, budget } => {
            let pm = parse_strategy(&p)?;
            let found = find_counterexample(&pm, &payoffs, budget, seed);
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "config": {"p": p, "budget": budget, "seed": seed, "payoffs": payoffs},
                "invincible_condition": is_invincible(&pm),
                "found": found.is_some(),
                "counterexample": found,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            match found {
                Some(c) => eprintln!("# beaten by {} (sX {:.6} < sY {:.6})", c.q, c.s_x, c.s_y),
                None => eprintln!("# no opponent found within budget {budget}"),
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Tournament {
            roster,
            rounds,
            replicates,
            out,
        } => {
            let entries = match roster {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))
                        .map_err(|e| UsageError(format!("{e:#}")))?;
                    match parse_roster(&text) {
                        Ok(r) => r,
                        Err(e) => return usage(format!("roster: {e}")),
                    }
                }
                None => ipd::named_catalog(),
            };
            if entries.len() < 2 {
                return usage("a tournament needs at least two strategies");
            }
            let cfg = TournamentConfig {
                rounds,
                replicates,
                seed,
                payoffs,
            };
            let report = run_tournament(&entries, &cfg);
            eprintln!(
                "# round-robin over {} strategies, {rounds} rounds x {replicates} replicates, \
                 seed {seed}",
                entries.len()
            );
            for (rank, s) in report.ranking.iter().enumerate() {
                eprintln!(
                    "# {:>2}. {:<24} score {:.4}  {}W/{}T/{}L",
                    rank + 1,
                    s.name,
                    s.average_score,
                    s.wins,
                    s.ties,
                    s.losses
                );
            }
            write_out(&out, serde_json::to_string_pretty(&report)?.as_bytes())?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Evolve {
            scenario,
            steps,
            runs,
            out,
        } => {
            let text = fs::read_to_string(&scenario)
                .with_context(|| format!("reading {}", scenario.display()))
                .map_err(|e| UsageError(format!("{e:#}")))?;
            let parsed = match Scenario::from_json(&text) {
                Ok(s) => s,
                Err(e) => return usage(format!("scenario: {e}")),
            };
            let (pop0, mut cfg) = match parsed.build() {
                Ok(x) => x,
                Err(e) => return usage(format!("scenario: {e}")),
            };
            if let Some(s) = steps {
                cfg.steps = s;
            }
            if cli.common.seed.is_some() || std::env::var("IPD_SEED").is_ok() {
                cfg.seed = seed;
            }
            eprintln!(
                "# evolving {} agents for up to {} steps x {runs} runs (seed {}, intensity {}, \
                 selection {:?})",
                pop0.size(),
                cfg.steps,
                cfg.seed,
                cfg.intensity,
                cfg.selection
            );
            let mut fixations: BTreeMap<String, u32> = BTreeMap::new();
            let mut fixation_steps: Vec<usize> = Vec::new();
            let mut first_trace = None;
            for run_idx in 0..runs {
                let run_cfg = ipd::evolution::EvolutionConfig {
                    seed: ipd::rng::derive_seed(cfg.seed, run_idx as u64),
                    ..cfg
                };
                let trace = MoranProcess::new(pop0.clone(), run_cfg).run();
                match trace.fixation {
                    Some((step, k)) => {
                        *fixations.entry(trace.strategies[k].clone()).or_default() += 1;
                        fixation_steps.push(step);
                    }
                    None => *fixations.entry("(none)".into()).or_default() += 1,
                }
                if run_idx == 0 {
                    first_trace = Some(trace);
                }
            }
            if let Some(path) = &out {
                let mut csv = Vec::new();
                ipd::evolution::write_trace_csv(first_trace.as_ref().unwrap(), &mut csv)?;
                fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
                eprintln!("# first run's trace written to {}", path.display());
            }
            let mean_fixation = if fixation_steps.is_empty() {
                None
            } else {
                Some(fixation_steps.iter().sum::<usize>() as f64 / fixation_steps.len() as f64)
            };
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "config": {
                    "scenario": scenario.display().to_string(),
                    "runs": runs,
                    "steps": cfg.steps,
                    "seed": cfg.seed,
                    "intensity": cfg.intensity,
                    "mutation": cfg.mutation,
                    "selection": cfg.selection,
                    "payoffs": cfg.payoffs,
                },
                "fixations": fixations,
                "mean_fixation_step": mean_fixation,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(ExitCode::SUCCESS)
        }

        Command::Verify { suite, scale } => {
            let scale = match scale.as_str() {
                "small" => Scale::Small,
                "full" => Scale::Full,
                other => return usage(format!("unknown scale {other:?} (small|full)")),
            };
            let Some(reports) = run_suite(&suite, scale, seed, &payoffs) else {
                return usage(format!(
                    "unknown suite {suite:?} (theorem1|theorem2|theorem4|theorem5|akin|oracle|all)"
                ));
            };
            let mut failed = false;
            for report in &reports {
                eprintln!(
                    "# {}: {} — {} checks, {} failures, worst {:.3e}",
                    report.suite,
                    if report.passed() { "pass" } else { "FAIL" },
                    report.checks,
                    report.failures,
                    report.worst
                );
                failed |= !report.passed();
            }
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "config": {"suite": suite, "scale": scale, "seed": seed, "payoffs": payoffs},
                "reports": reports,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
    }
}
