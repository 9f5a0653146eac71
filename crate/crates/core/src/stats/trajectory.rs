use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::lowess::{lowess_fit, LowessParams};
use super::StatsError;

/// Per-round cooperation counts contributed by one simulation (or one whole
/// network). This is the unit the bootstrap resamples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTally {
    pub cooperations: Vec<u32>,
    pub decisions: Vec<u32>,
}

impl RoundTally {
    pub fn new(rounds: usize) -> RoundTally {
        RoundTally { cooperations: vec![0; rounds], decisions: vec![0; rounds] }
    }

    pub fn rounds(&self) -> usize {
        self.decisions.len()
    }

    pub fn add(&mut self, round_index: usize, cooperated: bool) {
        self.decisions[round_index] += 1;
        if cooperated {
            self.cooperations[round_index] += 1;
        }
    }
}

/// Population cooperation rate per round, with the number of decisions behind
/// each rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySeries {
    pub rates: Vec<f64>,
    pub decisions: Vec<u32>,
}

impl TrajectorySeries {
    pub fn rounds(&self) -> Vec<f64> {
        (1..=self.rates.len()).map(|r| r as f64).collect()
    }
}

pub(crate) fn accumulate<'a, I>(tallies: I, rounds: usize) -> Result<TrajectorySeries, StatsError>
where
    I: IntoIterator<Item = &'a RoundTally>,
{
    let mut coop = vec![0u64; rounds];
    let mut total = vec![0u64; rounds];
    let mut any = false;
    for t in tallies {
        any = true;
        if t.rounds() != rounds || t.cooperations.len() != rounds {
            return Err(StatsError::HorizonMismatch { expected: rounds, found: t.rounds() });
        }
        for r in 0..rounds {
            coop[r] += t.cooperations[r] as u64;
            total[r] += t.decisions[r] as u64;
        }
    }
    if !any {
        return Err(StatsError::NoData);
    }
    let mut rates = Vec::with_capacity(rounds);
    for r in 0..rounds {
        if total[r] == 0 {
            return Err(StatsError::NoDecisions(r + 1));
        }
        rates.push(coop[r] as f64 / total[r] as f64);
    }
    Ok(TrajectorySeries { rates, decisions: total.into_iter().map(|t| t as u32).collect() })
}

/// Round-by-round cooperation rate pooled over all simulations of a
/// condition: cooperative decisions over all decisions in that round.
pub fn cooperation_trajectory(tallies: &[RoundTally]) -> Result<TrajectorySeries, StatsError> {
    let rounds = tallies.first().ok_or(StatsError::NoData)?.rounds();
    accumulate(tallies, rounds)
}

/// Root mean squared difference between two equal-length series.
pub fn rmse(observed: &[f64], fitted: &[f64]) -> Result<f64, StatsError> {
    if observed.len() != fitted.len() {
        return Err(StatsError::LengthMismatch(observed.len(), fitted.len()));
    }
    if observed.is_empty() {
        return Err(StatsError::Empty);
    }
    let sse: f64 = observed.iter().zip(fitted).map(|(o, f)| (o - f) * (o - f)).sum();
    Ok(libm::sqrt(sse / observed.len() as f64))
}

/// RMSE of a trajectory against its own LOWESS fit.
pub fn stability_rmse(series: &TrajectorySeries, params: &LowessParams) -> Result<f64, StatsError> {
    let fitted = lowess_fit(&series.rounds(), &series.rates, params)?;
    rmse(&series.rates, &fitted)
}
