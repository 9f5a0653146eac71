//! Stability statistics: population cooperation trajectories, LOWESS
//! smoothing, the RMSE stability metric, simulation-level bootstrap of RMSE
//! differences and the two omnibus binomial tests.

mod binomial;
mod bootstrap;
mod lowess;
mod trajectory;

pub use binomial::{binomial_tail, omnibus, OmnibusResult, ALPHA};
pub use bootstrap::{
    bootstrap_diff, percentile_ci, BootstrapConfig, BootstrapOutcome, BootstrapPlan, BootstrapSeeds, ResampleUnit,
    DEFAULT_ITERATIONS_DYADIC, DEFAULT_ITERATIONS_NETWORK,
};
pub use lowess::{lowess_fit, LowessParams};
pub use trajectory::{cooperation_trajectory, rmse, stability_rmse, RoundTally, TrajectorySeries};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("no completed simulations to analyze")]
    NoData,
    #[error("inconsistent horizon: expected {expected} rounds, found {found}")]
    HorizonMismatch { expected: usize, found: usize },
    #[error("round {0} has no decisions")]
    NoDecisions(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("lowess needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("bandwidth {frac} leaves {k} neighbor(s); at least 2 are needed")]
    Bandwidth { frac: f64, k: usize },
    #[error("x values must be finite and strictly increasing (index {0})")]
    UnsortedX(usize),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("bootstrap iteration {iteration} failed: {source}")]
    Iteration {
        iteration: u32,
        #[source]
        source: alloc::boxed::Box<StatsError>,
    },
}
