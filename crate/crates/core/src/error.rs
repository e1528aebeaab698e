use thiserror::Error;

use crate::game::StrategySet;

#[derive(Debug, Error)]
pub enum HypergameError {
    #[error("invalid game parameters: {0}")]
    InvalidParams(String),

    #[error("invalid introspection strength w = {0}: must be finite and >= 0")]
    InvalidIntrospection(f64),

    #[error("invalid strategy set {0:?}: expected a nonempty string over C, D, L without repeats")]
    InvalidStrategySet(String),

    #[error("stationary solve failed: residual {residual:e} exceeds {tolerance:e}")]
    StationarySolve { residual: f64, tolerance: f64 },

    #[error("payoff table entry {row}:{col} failed: {source}")]
    PairSolve {
        row: StrategySet,
        col: StrategySet,
        #[source]
        source: Box<HypergameError>,
    },

    #[error("no sign change of {what} in w over [{lo}, {hi}]")]
    NoBracket {
        what: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("threshold methods disagree: transcendental {transcendental}, bisection {bisection}")]
    ThresholdMismatch { transcendental: f64, bisection: f64 },

    #[error("shifted fitness {value} of set index {index} is not positive; increase the offset")]
    NonPositiveFitness { index: usize, value: f64 },

    #[error("invalid population state: {0}")]
    InvalidPopulation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HypergameError>;
