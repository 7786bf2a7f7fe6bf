//! Moran-process evolution of strategy populations, on a complete interaction
//! graph (single population) or a complete-bipartite one (two parties).
//!
//! Each step: every agent's fitness is its mean payoff against its graph
//! neighbours; one agent reproduces with probability proportional to
//! `exp(intensity * fitness)` (an intensity of zero is exactly neutral drift);
//! the offspring replaces a uniformly random agent of the reproducer's party.
//! Population and party sizes never change.
//!
//! Pairwise payoffs come from the analytic stationary score whenever both
//! rules are memory-one and the pair is non-degenerate, and from finite-round
//! simulation otherwise; values are cached per strategy pair (strategies are
//! immutable, so the cache never invalidates).

use crate::catalog::{NamedStrategy, RuleSpec};
use crate::markov::{determinants, stationary_analytic, DEGENERACY_EPSILON};
use crate::rng::derive_seed;
use crate::strategy::{ParseStrategyError, PayoffMatrix};
use crate::tournament::{play_match, MatchConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Single,
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Agent {
    /// Index into the population's strategy table.
    pub strategy: usize,
    pub party: Party,
}

/// Fixed-size multiset of agents plus the strategy table they draw from.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    table: Vec<NamedStrategy>,
    agents: Vec<Agent>,
    bipartite: bool,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PopulationError {
    #[error("a population needs at least two agents, got {0}")]
    TooSmall(usize),
    #[error("bipartite populations need agents in both parties")]
    EmptyParty,
    #[error("mixing party {0:?} with single-population agents")]
    MixedGraph(Party),
}

impl Population {
    /// Complete-graph population from `(strategy, count)` groups.
    pub fn single(groups: Vec<(NamedStrategy, usize)>) -> Result<Self, PopulationError> {
        Population::build(
            groups
                .into_iter()
                .map(|(s, n)| (s, Party::Single, n))
                .collect(),
        )
    }

    /// Complete-bipartite population; agents only interact across parties.
    pub fn bipartite(
        party_a: Vec<(NamedStrategy, usize)>,
        party_b: Vec<(NamedStrategy, usize)>,
    ) -> Result<Self, PopulationError> {
        let mut groups: Vec<(NamedStrategy, Party, usize)> =
            party_a.into_iter().map(|(s, n)| (s, Party::A, n)).collect();
        groups.extend(party_b.into_iter().map(|(s, n)| (s, Party::B, n)));
        Population::build(groups)
    }

    pub fn build(groups: Vec<(NamedStrategy, Party, usize)>) -> Result<Self, PopulationError> {
        let mut table: Vec<NamedStrategy> = Vec::new();
        let mut agents = Vec::new();
        for (strategy, party, count) in groups {
            let idx = match table.iter().position(|s| *s == strategy) {
                Some(i) => i,
                None => {
                    table.push(strategy);
                    table.len() - 1
                }
            };
            agents.extend(std::iter::repeat_n(
                Agent {
                    strategy: idx,
                    party,
                },
                count,
            ));
        }
        if agents.len() < 2 {
            return Err(PopulationError::TooSmall(agents.len()));
        }
        let bipartite = agents.iter().any(|a| a.party != Party::Single);
        if bipartite {
            if let Some(bad) = agents.iter().find(|a| a.party == Party::Single) {
                return Err(PopulationError::MixedGraph(bad.party));
            }
            let n_a = agents.iter().filter(|a| a.party == Party::A).count();
            if n_a == 0 || n_a == agents.len() {
                return Err(PopulationError::EmptyParty);
            }
        }
        Ok(Population {
            table,
            agents,
            bipartite,
        })
    }

    pub fn size(&self) -> usize {
        self.agents.len()
    }

    pub fn is_bipartite(&self) -> bool {
        self.bipartite
    }

    pub fn table(&self) -> &[NamedStrategy] {
        &self.table
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    /// Agent count per strategy table index.
    pub fn counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.table.len()];
        for a in &self.agents {
            counts[a.strategy] += 1;
        }
        counts
    }

    pub fn party_size(&self, party: Party) -> usize {
        self.agents.iter().filter(|a| a.party == party).count()
    }

    /// The sole surviving strategy index, if the population is monomorphic.
    pub fn fixed_strategy(&self) -> Option<usize> {
        let first = self.agents[0].strategy;
        self.agents
            .iter()
            .all(|a| a.strategy == first)
            .then_some(first)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    /// Fitness-proportional birth, uniform death.
    Moran,
    /// Deterministic death of the lowest-fitness agent, fitness-proportional birth.
    EliminateWorst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub steps: usize,
    /// Rounds per finite-round pairwise evaluation (used when the analytic
    /// score is unavailable).
    pub rounds: u32,
    /// Simulation replicates averaged per pairwise evaluation.
    pub replicates: u32,
    pub seed: u64,
    /// Selection intensity: reproduction weight is `exp(intensity * fitness)`.
    pub intensity: f64,
    /// Probability that an offspring mutates to a uniformly random strategy
    /// from the population's table.
    pub mutation: f64,
    pub payoffs: PayoffMatrix,
    pub selection: SelectionMode,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            steps: 100_000,
            rounds: 1000,
            replicates: 3,
            seed: 0,
            intensity: 1.0,
            mutation: 0.0,
            payoffs: PayoffMatrix::conventional(),
            selection: SelectionMode::Moran,
        }
    }
}

/// X's long-run payoff against Y: the analytic stationary score when both
/// rules are memory-one and non-degenerate, otherwise the mean over
/// `cfg.replicates` finite-round simulations of `cfg.rounds` rounds.
pub fn fitness_oracle(x: &RuleSpec, y: &RuleSpec, cfg: &EvolutionConfig) -> f64 {
    if let (Some(p), Some(q)) = (x.memory_one(), y.memory_one()) {
        if determinants(p, q).d.abs() > DEGENERACY_EPSILON {
            return stationary_analytic(p, q, &cfg.payoffs)
                .expect("non-degenerate pair solves directly")
                .s_x;
        }
    }
    let mut total = 0.0;
    for rep in 0..cfg.replicates {
        let mc = MatchConfig {
            rounds: cfg.rounds,
            seed: derive_seed(cfg.seed ^ 0x657661, rep as u64),
            match_id: rep as u64,
            payoffs: cfg.payoffs,
            record_trajectory: false,
        };
        total += play_match(x, y, &mc).avg_x;
    }
    total / cfg.replicates as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub strategies: Vec<String>,
    /// Per-step counts, one row per recorded step including the initial state.
    pub counts: Vec<Vec<u32>>,
    /// `(step, strategy index)` for each strategy whose count hit zero.
    pub extinctions: Vec<(usize, usize)>,
    /// `(step, strategy index)` when one strategy took the whole population.
    pub fixation: Option<(usize, usize)>,
}

/// CSV rows `step,strategy,count`.
pub fn write_trace_csv<W: Write>(trace: &EvolutionTrace, out: &mut W) -> io::Result<()> {
    writeln!(out, "step,strategy,count")?;
    for (step, row) in trace.counts.iter().enumerate() {
        for (k, count) in row.iter().enumerate() {
            writeln!(out, "{},{},{}", step, trace.strategies[k], count)?;
        }
    }
    Ok(())
}

/// A running Moran process; owns the population, the RNG, and the pairwise
/// payoff cache. Replicate runs are independent values of `cfg.seed`.
pub struct MoranProcess {
    pop: Population,
    cfg: EvolutionConfig,
    rng: ChaCha12Rng,
    cache: HashMap<(usize, usize), f64>,
}

impl MoranProcess {
    pub fn new(pop: Population, cfg: EvolutionConfig) -> Self {
        MoranProcess {
            pop,
            cfg,
            rng: ChaCha12Rng::seed_from_u64(cfg.seed),
            cache: HashMap::new(),
        }
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    fn pairwise(&mut self, x: usize, y: usize) -> f64 {
        if let Some(&hit) = self.cache.get(&(x, y)) {
            return hit;
        }
        let value = fitness_oracle(&self.pop.table[x].rule, &self.pop.table[y].rule, &self.cfg);
        self.cache.insert((x, y), value);
        value
    }

    /// Mean payoff of one agent of strategy `k` in party `party` against its
    /// current neighbours.
    fn class_fitness(&mut self, k: usize, party: Party) -> f64 {
        let mut counts = vec![0u32; self.pop.table.len()];
        let mut neighbours = 0u32;
        for a in &self.pop.agents {
            let is_neighbour = match party {
                Party::Single => true,
                p => a.party != p,
            };
            if is_neighbour {
                counts[a.strategy] += 1;
                neighbours += 1;
            }
        }
        if party == Party::Single {
            // on the complete graph an agent is not its own neighbour
            counts[k] -= 1;
            neighbours -= 1;
        }
        if neighbours == 0 {
            return 0.0;
        }
        let mut total = 0.0;
        for (j, &n) in counts.iter().enumerate() {
            if n > 0 {
                total += n as f64 * self.pairwise(k, j);
            }
        }
        total / neighbours as f64
    }

    /// One birth-death event. Population and party sizes are invariant.
    pub fn step(&mut self) {
        // fitness per live (strategy, party) class
        let mut classes: Vec<(usize, Party, u32)> = Vec::new();
        for a in &self.pop.agents {
            match classes
                .iter_mut()
                .find(|(k, p, _)| *k == a.strategy && *p == a.party)
            {
                Some(entry) => entry.2 += 1,
                None => classes.push((a.strategy, a.party, 1)),
            }
        }
        let fitness: Vec<f64> = classes
            .iter()
            .map(|&(k, p, _)| self.class_fitness(k, p))
            .collect();

        // birth: weight count * exp(intensity * fitness)
        let weights: Vec<f64> = classes
            .iter()
            .zip(&fitness)
            .map(|(&(_, _, n), &f)| n as f64 * (self.cfg.intensity * f).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        let mut draw = self.rng.random::<f64>() * total;
        let mut parent_class = classes.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            draw -= w;
            if draw <= 0.0 {
                parent_class = i;
                break;
            }
        }
        let (parent_strategy, parent_party, _) = classes[parent_class];

        // death: uniform within the parent's party, or the worst agent there
        let victim_pool: Vec<usize> = self
            .pop
            .agents
            .iter()
            .enumerate()
            .filter(|(_, a)| a.party == parent_party)
            .map(|(i, _)| i)
            .collect();
        let victim = match self.cfg.selection {
            SelectionMode::Moran => victim_pool[self.rng.random_range(0..victim_pool.len())],
            SelectionMode::EliminateWorst => {
                let mut worst = victim_pool[0];
                let mut worst_f = f64::INFINITY;
                for &i in &victim_pool {
                    let a = self.pop.agents[i];
                    let ci = classes
                        .iter()
                        .position(|&(k, p, _)| k == a.strategy && p == a.party)
                        .expect("agent class exists");
                    if fitness[ci] < worst_f {
                        worst_f = fitness[ci];
                        worst = i;
                    }
                }
                worst
            }
        };

        let offspring = if self.cfg.mutation > 0.0 && self.rng.random::<f64>() < self.cfg.mutation {
            self.rng.random_range(0..self.pop.table.len())
        } else {
            parent_strategy
        };
        self.pop.agents[victim] = Agent {
            strategy: offspring,
            party: parent_party,
        };
    }

    /// Runs until fixation or the step budget, recording counts every step
    /// along with extinction events.
    pub fn run(mut self) -> EvolutionTrace {
        let mut counts = vec![self.pop.counts()];
        let mut extinctions = Vec::new();
        let mut fixation = self.pop.fixed_strategy().map(|k| (0, k));
        if fixation.is_none() {
            for step in 1..=self.cfg.steps {
                self.step();
                let now = self.pop.counts();
                let before = counts.last().unwrap();
                for k in 0..now.len() {
                    if before[k] > 0 && now[k] == 0 {
                        extinctions.push((step, k));
                    }
                }
                counts.push(now);
                if let Some(k) = self.pop.fixed_strategy() {
                    fixation = Some((step, k));
                    break;
                }
            }
        }
        EvolutionTrace {
            strategies: self.pop.table.iter().map(|s| s.name.clone()).collect(),
            counts,
            extinctions,
            fixation,
        }
    }
}

/// Declarative scenario: groups of agents plus the process configuration.
/// Parsed from JSON; see the repository README for the schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub groups: Vec<GroupSpec>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub rounds: Option<u32>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub intensity: Option<f64>,
    #[serde(default)]
    pub mutation: Option<f64>,
    #[serde(default)]
    pub selection: Option<SelectionMode>,
    #[serde(default)]
    pub payoffs: Option<PayoffMatrix>,
}

fn default_schema_version() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpec {
    pub party: Party,
    /// Catalog name or `p0:p1,p2,p3,p4` literal.
    pub strategy: String,
    pub count: usize,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Strategy(#[from] ParseStrategyError),
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error("scenario json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("step budget must be at least 1")]
    NoSteps,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<(Population, EvolutionConfig), ScenarioError> {
        let mut groups = Vec::new();
        for g in &self.groups {
            groups.push((crate::catalog::parse_entry(&g.strategy)?, g.party, g.count));
        }
        let pop = Population::build(groups)?;
        if self.steps == Some(0) {
            return Err(ScenarioError::NoSteps);
        }
        let defaults = EvolutionConfig::default();
        let cfg = EvolutionConfig {
            steps: self.steps.unwrap_or(defaults.steps),
            rounds: self.rounds.unwrap_or(defaults.rounds),
            replicates: defaults.replicates,
            seed: self.seed.unwrap_or(defaults.seed),
            intensity: self.intensity.unwrap_or(defaults.intensity),
            mutation: self.mutation.unwrap_or(defaults.mutation),
            payoffs: self.payoffs.unwrap_or(defaults.payoffs),
            selection: self.selection.unwrap_or(defaults.selection),
        };
        Ok((pop, cfg))
    }
}
