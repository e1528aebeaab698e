//! Evolutionary hypergame dynamics for the voluntary prisoner's dilemma.
//!
//! Players differ in which of the three actions (cooperate, defect, opt out)
//! they can use. Pairs of strategy sets are scored by the stationary payoffs
//! of introspection learning ([`introspection`], [`analytic`]), the scores
//! are compared round-robin ([`tournament`]), and the sets then compete in a
//! well-mixed population ([`replicator`]) or on a lattice ([`lattice`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod game;
pub mod introspection;
pub mod lattice;
pub mod output;
pub mod replicator;
pub mod tournament;

pub use error::{HypergameError, Result};
pub use game::{
    base_payoff, enumerate_strategy_sets, GameParams, PayoffPair, SetMode, Strategy, StrategySet,
};
pub use introspection::{
    build_transition_matrix, expected_payoffs, fermi, simulate_introspection,
    stationary_distribution, ExpectedPayoffPair, IntrospectionConfig, StationaryDistribution,
    TransitionMatrix,
};
pub use output::NumberFormat;
pub use tournament::{build_payoff_table, tournament_report, PayoffTable, TournamentReport};
