use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::lowess::LowessParams;
use super::trajectory::{accumulate, stability_rmse, RoundTally};
use super::StatsError;
use crate::seed::{derive_seed, domain, rng_from_seed};

pub const DEFAULT_ITERATIONS_DYADIC: u32 = 10_000;
pub const DEFAULT_ITERATIONS_NETWORK: u32 = 1_000;

/// What one resampled unit is: a dyadic simulation (both agents) or a whole
/// network with all of its dyads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleUnit {
    Simulation,
    Network,
}

impl ResampleUnit {
    pub fn default_iterations(self) -> u32 {
        match self {
            ResampleUnit::Simulation => DEFAULT_ITERATIONS_DYADIC,
            ResampleUnit::Network => DEFAULT_ITERATIONS_NETWORK,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub iterations: u32,
    pub lowess: LowessParams,
    pub level: f64,
    pub unit: ResampleUnit,
}

impl BootstrapConfig {
    pub fn new(unit: ResampleUnit) -> BootstrapConfig {
        BootstrapConfig { iterations: unit.default_iterations(), lowess: LowessParams::default(), level: 0.95, unit }
    }
}

/// Independent resampling streams for the two conditions. Swapping the
/// conditions together with their seeds reproduces the same draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapSeeds {
    pub no_messaging: u64,
    pub messaging: u64,
}

impl BootstrapSeeds {
    pub fn from_master(seed: u64) -> BootstrapSeeds {
        BootstrapSeeds {
            no_messaging: derive_seed(seed, domain::BOOTSTRAP_NO_MESSAGING, 0),
            messaging: derive_seed(seed, domain::BOOTSTRAP_MESSAGING, 0),
        }
    }

    pub fn swapped(self) -> BootstrapSeeds {
        BootstrapSeeds { no_messaging: self.messaging, messaging: self.no_messaging }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOutcome {
    pub rmse_no_messaging: f64,
    pub rmse_messaging: f64,
    /// No-messaging minus messaging; positive means messaging smoothed the trajectory.
    pub difference: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// The confidence interval excludes zero.
    pub significant: bool,
    pub iterations: u32,
    pub unit: ResampleUnit,
}

/// Empirical quantile with linear interpolation between closest ranks
/// (position `(n - 1) * q` in the sorted sample).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Two-sided percentile interval at `level`.
pub fn percentile_ci(samples: &[f64], level: f64) -> Result<(f64, f64), StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::Parameter(alloc::format!("level {level} outside (0, 1)")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail)))
}

/// A prepared bootstrap comparison. Replicates are pure functions of their
/// index, so they can be computed in any order or in parallel.
#[derive(Clone, Debug)]
pub struct BootstrapPlan<'a> {
    no_messaging: &'a [RoundTally],
    messaging: &'a [RoundTally],
    rounds: usize,
    config: BootstrapConfig,
    seeds: BootstrapSeeds,
    rmse_no_messaging: f64,
    rmse_messaging: f64,
}

impl<'a> BootstrapPlan<'a> {
    pub fn new(
        no_messaging: &'a [RoundTally],
        messaging: &'a [RoundTally],
        config: BootstrapConfig,
        seeds: BootstrapSeeds,
    ) -> Result<BootstrapPlan<'a>, StatsError> {
        if config.iterations == 0 {
            return Err(StatsError::Parameter("at least one bootstrap iteration is required".into()));
        }
        let rounds = no_messaging.first().ok_or(StatsError::NoData)?.rounds();
        if messaging.is_empty() {
            return Err(StatsError::NoData);
        }
        let rmse_no_messaging = stability_rmse(&accumulate(no_messaging, rounds)?, &config.lowess)?;
        let rmse_messaging = stability_rmse(&accumulate(messaging, rounds)?, &config.lowess)?;
        Ok(BootstrapPlan { no_messaging, messaging, rounds, config, seeds, rmse_no_messaging, rmse_messaging })
    }

    pub fn iterations(&self) -> u32 {
        self.config.iterations
    }

    fn resampled_rmse(&self, units: &[RoundTally], seed: u64, iteration: u32) -> Result<f64, StatsError> {
        let mut rng = rng_from_seed(derive_seed(seed, domain::BOOTSTRAP, iteration as u64));
        let n = units.len();
        let picks = (0..n).map(|_| &units[rng.gen_range(0..n)]);
        let series = accumulate(picks, self.rounds)?;
        stability_rmse(&series, &self.config.lowess)
    }

    /// RMSE difference (no-messaging minus messaging) for one replicate.
    pub fn replicate(&self, iteration: u32) -> Result<f64, StatsError> {
        let wrap = |e: StatsError| StatsError::Iteration { iteration, source: Box::new(e) };
        let a = self.resampled_rmse(self.no_messaging, self.seeds.no_messaging, iteration).map_err(wrap)?;
        let b = self.resampled_rmse(self.messaging, self.seeds.messaging, iteration).map_err(wrap)?;
        Ok(a - b)
    }

    /// Summarizes replicate differences (in iteration order) into an outcome.
    pub fn finish(&self, differences: &[f64]) -> Result<BootstrapOutcome, StatsError> {
        let (ci_lower, ci_upper) = percentile_ci(differences, self.config.level)?;
        Ok(BootstrapOutcome {
            rmse_no_messaging: self.rmse_no_messaging,
            rmse_messaging: self.rmse_messaging,
            difference: self.rmse_no_messaging - self.rmse_messaging,
            ci_lower,
            ci_upper,
            significant: !(ci_lower <= 0.0 && 0.0 <= ci_upper),
            iterations: differences.len() as u32,
            unit: self.config.unit,
        })
    }
}

/// Simulation-level bootstrap of the RMSE difference between a no-messaging
/// and a messaging condition. Each iteration resamples both conditions'
/// units independently with replacement, rebuilds both trajectories, refits
/// LOWESS and records the RMSE difference.
pub fn bootstrap_diff(
    no_messaging: &[RoundTally],
    messaging: &[RoundTally],
    config: BootstrapConfig,
    seeds: BootstrapSeeds,
) -> Result<BootstrapOutcome, StatsError> {
    let plan = BootstrapPlan::new(no_messaging, messaging, config, seeds)?;
    let diffs = (0..config.iterations).map(|i| plan.replicate(i)).collect::<Result<Vec<_>, _>>()?;
    plan.finish(&diffs)
}
