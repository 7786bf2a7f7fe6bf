//! Named strategies and the uniform play-rule interface.
//!
//! Every strategy, memory-one or not, answers the same question each round:
//! with what probability do I cooperate given the joint history so far (from
//! my own perspective)? Multi-memory rules consume the whole history;
//! memory-one rules only look at the last outcome.

use crate::strategy::{MemoryOneStrategy, Outcome, ParseStrategyError};
use serde::{Deserialize, Serialize};

/// A play rule behind the shared next-move-probability interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RuleSpec {
    MemoryOne(MemoryOneStrategy),
    /// Defects only if the opponent defected in both of the last two rounds.
    TitForTwoTats,
    /// Defects whenever the opponent's defections so far are at least its
    /// cooperations (so the first move is D).
    HardGoByMajority,
}

impl RuleSpec {
    /// Probability of cooperating next round given the history so far,
    /// ordered oldest first and seen from this player's perspective.
    pub fn cooperation_probability(&self, history: &[Outcome]) -> f64 {
        match self {
            RuleSpec::MemoryOne(p) => p.cooperation_probability(history.last().copied()),
            RuleSpec::TitForTwoTats => {
                let defected_last_two = history.len() >= 2
                    && history[history.len() - 2..]
                        .iter()
                        .all(|o| !o.their_move().is_cooperate());
                if defected_last_two {
                    0.0
                } else {
                    1.0
                }
            }
            RuleSpec::HardGoByMajority => {
                let coops = history
                    .iter()
                    .filter(|o| o.their_move().is_cooperate())
                    .count();
                let defects = history.len() - coops;
                if defects >= coops {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn memory_one(&self) -> Option<&MemoryOneStrategy> {
        match self {
            RuleSpec::MemoryOne(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedStrategy {
    pub name: String,
    pub rule: RuleSpec,
}

impl NamedStrategy {
    pub fn new(name: impl Into<String>, rule: RuleSpec) -> Self {
        NamedStrategy {
            name: name.into(),
            rule,
        }
    }

    fn memory_one(name: &str, first: f64, cond: [f64; 4]) -> Self {
        let p = MemoryOneStrategy::new(first, cond).expect("catalog entries are valid");
        NamedStrategy::new(name, RuleSpec::MemoryOne(p))
    }
}

/// The strategy roster used by the experiments.
///
/// First moves for the Stewart-Plotkin zero-determinant entries are not
/// canonical anywhere; this catalog plays C for the generous ZDGTFT-2 and D
/// for Extort-2. The invincible tournament entrant defects first (that choice
/// excludes all degenerate edge cases); the catalyst variant cooperates first
/// by definition.
pub fn named_catalog() -> Vec<NamedStrategy> {
    vec![
        NamedStrategy::memory_one("Cooperator", 1.0, [1.0, 1.0, 1.0, 1.0]),
        NamedStrategy::memory_one("Defector", 0.0, [0.0, 0.0, 0.0, 0.0]),
        NamedStrategy::memory_one("Tit For Tat", 1.0, [1.0, 0.0, 1.0, 0.0]),
        NamedStrategy::memory_one("Grudger", 1.0, [1.0, 0.0, 0.0, 0.0]),
        NamedStrategy::memory_one("Win-Stay Lose-Shift", 1.0, [1.0, 0.0, 0.0, 1.0]),
        NamedStrategy::memory_one("Random", 0.5, [0.5, 0.5, 0.5, 0.5]),
        NamedStrategy::memory_one("Repeat", 1.0, [1.0, 1.0, 0.0, 0.0]),
        // forces sX - R = 2*(sY - R) under (T,R,P,S) = (5,3,1,0)
        NamedStrategy::memory_one("ZDGTFT-2", 1.0, [1.0, 1.0 / 8.0, 1.0, 1.0 / 4.0]),
        // forces sX - P = 2*(sY - P) under (5,3,1,0); chi = 2, phi = 1/18
        NamedStrategy::memory_one("Extort-2", 0.0, [8.0 / 9.0, 0.5, 1.0 / 3.0, 0.0]),
        NamedStrategy::new("Tit For Two Tats", RuleSpec::TitForTwoTats),
        NamedStrategy::new("Hard Go By Majority", RuleSpec::HardGoByMajority),
        NamedStrategy::memory_one("Invincible", 0.0, [1.0, 0.7, 0.2, 0.0]),
        NamedStrategy::memory_one("Catalyst", 1.0, [0.9, 0.7, 0.2, 0.0]),
    ]
}

fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Case-insensitive catalog lookup; punctuation and spacing are ignored and
/// the common short names (TFT, WSLS, AllC, AllD, Grim, ...) are accepted.
pub fn lookup(name: &str) -> Option<NamedStrategy> {
    let key = normalize(name);
    let canonical = match key.as_str() {
        "tft" | "titfortat" => "titfortat",
        "wsls" | "winstayloseshift" | "pavlov" => "winstayloseshift",
        "allc" | "alwayscooperate" | "cooperator" => "cooperator",
        "alld" | "alwaysdefect" | "defector" => "defector",
        "grim" | "trigger" | "grudger" => "grudger",
        "tf2t" | "titfortwotats" | "titfor2tats" => "titfortwotats",
        "hardgobymajority" | "hgbm" => "hardgobymajority",
        other => other,
    };
    named_catalog()
        .into_iter()
        .find(|s| normalize(&s.name) == canonical)
}

/// Parses a roster entry: either a catalog name or a `p0:p1,p2,p3,p4` literal.
pub fn parse_entry(spec: &str) -> Result<NamedStrategy, ParseStrategyError> {
    let spec = spec.trim();
    if let Some(found) = lookup(spec) {
        return Ok(found);
    }
    let p: MemoryOneStrategy = spec.parse()?;
    Ok(NamedStrategy::new(spec, RuleSpec::MemoryOne(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::validate_strategy;

    #[test]
    fn lookups_match_expected_vectors() {
        let tft = lookup("TFT").unwrap();
        let p = tft.rule.memory_one().unwrap();
        assert_eq!(p.first_move(), 1.0);
        assert_eq!(p.probs(), [1.0, 0.0, 1.0, 0.0]);

        let wsls = lookup("wsls").unwrap();
        assert_eq!(
            wsls.rule.memory_one().unwrap().probs(),
            [1.0, 0.0, 0.0, 1.0]
        );

        let d = lookup("Defector").unwrap();
        assert_eq!(d.rule.memory_one().unwrap().probs(), [0.0; 4]);
        assert_eq!(d.rule.memory_one().unwrap().first_move(), 0.0);

        assert!(lookup("no such strategy").is_none());
    }

    #[test]
    fn wsls_truth_table_round_trip() {
        // cooperate after CC and DD, defect after CD and DC
        let wsls = lookup("WSLS").unwrap().rule;
        assert_eq!(wsls.cooperation_probability(&[]), 1.0);
        assert_eq!(wsls.cooperation_probability(&[Outcome::Cc]), 1.0);
        assert_eq!(wsls.cooperation_probability(&[Outcome::Cd]), 0.0);
        assert_eq!(wsls.cooperation_probability(&[Outcome::Dc]), 0.0);
        assert_eq!(wsls.cooperation_probability(&[Outcome::Dd]), 1.0);
    }

    #[test]
    fn catalog_size_and_validity() {
        let catalog = named_catalog();
        assert!(catalog.len() >= 12);
        // every memory-one entry round-trips through validation
        for s in &catalog {
            if let Some(p) = s.rule.memory_one() {
                let raw = [
                    p.first_move(),
                    p.probs()[0],
                    p.probs()[1],
                    p.probs()[2],
                    p.probs()[3],
                ];
                assert!(validate_strategy(raw).is_ok(), "{}", s.name);
            }
        }
    }

    #[test]
    fn tit_for_two_tats_needs_two_defections() {
        let rule = RuleSpec::TitForTwoTats;
        assert_eq!(rule.cooperation_probability(&[]), 1.0);
        assert_eq!(rule.cooperation_probability(&[Outcome::Cd]), 1.0);
        assert_eq!(
            rule.cooperation_probability(&[Outcome::Cd, Outcome::Cd]),
            0.0
        );
        assert_eq!(
            rule.cooperation_probability(&[Outcome::Cd, Outcome::Cc]),
            1.0
        );
        assert_eq!(
            rule.cooperation_probability(&[Outcome::Cc, Outcome::Dd, Outcome::Cd]),
            0.0
        );
    }

    #[test]
    fn hard_go_by_majority_defects_on_ties() {
        let rule = RuleSpec::HardGoByMajority;
        assert_eq!(rule.cooperation_probability(&[]), 0.0); // 0 >= 0
        assert_eq!(rule.cooperation_probability(&[Outcome::Dc]), 1.0); // they cooperated
        assert_eq!(
            rule.cooperation_probability(&[Outcome::Dc, Outcome::Dd]),
            0.0
        ); // 1-1 tie
        assert_eq!(
            rule.cooperation_probability(&[Outcome::Dc, Outcome::Dc, Outcome::Dd]),
            1.0
        );
    }

    #[test]
    fn zd_entries_satisfy_their_score_relations() {
        use crate::markov::stationary_analytic;
        use crate::strategy::PayoffMatrix;
        let payoffs = PayoffMatrix::conventional();
        let zdgtft = lookup("zdgtft-2").unwrap();
        let extort = lookup("extort-2").unwrap();
        let q = MemoryOneStrategy::new(0.5, [0.3, 0.9, 0.4, 0.6]).unwrap();

        let r = stationary_analytic(zdgtft.rule.memory_one().unwrap(), &q, &payoffs).unwrap();
        assert!(
            ((r.s_x - payoffs.r()) - 2.0 * (r.s_y - payoffs.r())).abs() < 1e-9,
            "generous relation violated: sX={} sY={}",
            r.s_x,
            r.s_y
        );

        let r = stationary_analytic(extort.rule.memory_one().unwrap(), &q, &payoffs).unwrap();
        assert!(
            ((r.s_x - payoffs.p()) - 2.0 * (r.s_y - payoffs.p())).abs() < 1e-9,
            "extortion relation violated: sX={} sY={}",
            r.s_x,
            r.s_y
        );
    }

    #[test]
    fn parse_entry_accepts_names_and_literals() {
        assert_eq!(parse_entry("tit for tat").unwrap().name, "Tit For Tat");
        let lit = parse_entry("0:1,0.7,0.2,0").unwrap();
        assert_eq!(lit.rule.memory_one().unwrap().probs(), [1.0, 0.7, 0.2, 0.0]);
        assert!(parse_entry("bogus").is_err());
    }
}
