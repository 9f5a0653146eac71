use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapOutcome;

/// Per-comparison significance level behind the excess-significance test.
pub const ALPHA: f64 = 0.05;

/// Largest `n` for which binomial coefficients are computed exactly in u128.
const EXACT_LIMIT: u32 = 120;

fn choose_exact(n: u32, k: u32) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

fn ln_choose(n: u32, k: u32) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

fn pmf(n: u32, j: u32, p: f64) -> f64 {
    let q = 1.0 - p;
    if n <= EXACT_LIMIT {
        choose_exact(n, j) as f64 * libm::pow(p, j as f64) * libm::pow(q, (n - j) as f64)
    } else {
        libm::exp(ln_choose(n, j) + j as f64 * libm::log(p) + (n - j) as f64 * libm::log(q))
    }
}

/// One-sided upper tail `P(X >= k)` for `X ~ Binomial(n, p0)`, summed with
/// Neumaier compensation.
pub fn binomial_tail(k: u32, n: u32, p0: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if p0 <= 0.0 {
        return 0.0;
    }
    if p0 >= 1.0 {
        return 1.0;
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for j in k..=n {
        let term = pmf(n, j, p0);
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    (sum + comp).clamp(0.0, 1.0)
}

/// The two population-level checks across a family of comparisons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmnibusResult {
    pub n: u32,
    pub significant: u32,
    pub expected_by_chance: f64,
    pub positive: u32,
    /// `P(X >= significant)`, `X ~ Binomial(n, 0.05)`.
    pub p_excess: f64,
    /// `P(X >= positive)`, `X ~ Binomial(n, 0.5)`.
    pub p_direction: f64,
}

pub fn omnibus(results: &[BootstrapOutcome]) -> OmnibusResult {
    let n = results.len() as u32;
    let significant = results.iter().filter(|r| r.significant).count() as u32;
    let positive = results.iter().filter(|r| r.difference > 0.0).count() as u32;
    OmnibusResult {
        n,
        significant,
        expected_by_chance: n as f64 * ALPHA,
        positive,
        p_excess: binomial_tail(significant, n, ALPHA),
        p_direction: binomial_tail(positive, n, 0.5),
    }
}
