//! Analysis toolkit for memory-one strategies in the iterated prisoner's
//! dilemma.
//!
//! The library computes exact stationary distributions and long-run scores
//! for strategy pairs through the determinant formulation of the outcome
//! Markov chain ([`markov`]), classifies strategies in closed form
//! (invincible, zero-determinant, extortionate; [`strategy`]), verifies those
//! classifications empirically by opponent sampling and counterexample search
//! ([`invincibility`], [`verify`]), and runs the two experiment engines:
//! finite-round round-robin tournaments ([`tournament`]) and Moran-process
//! evolution with an optional two-party interaction graph ([`evolution`]).
//!
//! A strategy here is a first-move cooperation probability `p0` plus the
//! conditional vector `(p1, p2, p3, p4)` over the previous round's joint
//! outcome, indexed `(CC, CD, DC, DD)` from the owner's perspective. The
//! central classification: a strategy never scores below any opponent's
//! limit-average payoff if and only if `p4 = 0` and `p2 + p3 <= 1`.
//!
//! All types are immutable after construction and safe to share across
//! threads; batch sampling runs in parallel with results independent of
//! worker count.

pub mod catalog;
pub mod evolution;
pub mod invincibility;
mod linalg;
pub mod markov;
pub mod rng;
pub mod strategy;
pub mod tournament;
pub mod verify;

pub use catalog::{lookup, named_catalog, NamedStrategy, RuleSpec};
pub use markov::{
    akin_residual, build_matrix, determinants, initial_distribution, press_dyson_dot,
    stationary_analytic, stationary_cesaro, CesaroOptions, Determinants, MarkovError, Method,
    StationaryResult, TransitionMatrix, DEGENERACY_EPSILON,
};
pub use strategy::{
    corollary_residual, extortion_fit, is_invincible, is_semi_cooperative_invincible,
    is_zero_determinant, make_extortionate, validate_strategy, zd_distance, ExtortionParams,
    MemoryOneStrategy, Move, Outcome, PayoffMatrix, ZdCoefficients,
};
