use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::StatsError;

/// Local-linear LOWESS settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowessParams {
    /// Fraction of points in each local neighborhood.
    pub frac: f64,
    /// Robustifying reweighting passes after the initial fit.
    pub iterations: u32,
}

impl Default for LowessParams {
    fn default() -> Self {
        LowessParams { frac: 0.4, iterations: 3 }
    }
}

impl LowessParams {
    pub fn new(frac: f64, iterations: u32) -> LowessParams {
        LowessParams { frac, iterations }
    }

    /// Neighborhood size for `n` points: `ceil(frac * n)`, capped at `n`.
    pub fn neighbors(&self, n: usize) -> usize {
        // the tolerance keeps products such as 0.4 * 10 from rounding up to 5
        let k = libm::ceil(self.frac * n as f64 - 1e-9);
        (k.max(0.0) as usize).min(n)
    }
}

/// Relative spread below which a local design counts as degenerate and the
/// fit falls back to the weighted mean.
const DEGENERATE_SPREAD: f64 = 1e-3;

/// Median absolute residuals at or below this multiple of the largest |y|
/// are roundoff and count as zero.
const ZERO_RESIDUAL: f64 = 1e-12;

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

fn bisquare(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u;
        t * t
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Bounds `[lo, hi)` of the `k` points nearest to `xs[i]`, ties going to the
/// smaller x. `xs` must be sorted.
fn window(xs: &[f64], i: usize, k: usize) -> (usize, usize) {
    let (mut lo, mut hi) = (i, i + 1);
    while hi - lo < k {
        let take_left = match (lo > 0, hi < xs.len()) {
            (true, true) => xs[i] - xs[lo - 1] <= xs[hi] - xs[i],
            (true, false) => true,
            (false, true) => false,
            (false, false) => unreachable!("window cannot exceed the data"),
        };
        if take_left {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    (lo, hi)
}

/// Weighted least-squares line over `xs[lo..hi]` evaluated at `x0`.
fn local_fit(xs: &[f64], ys: &[f64], robust: &[f64], lo: usize, hi: usize, i: usize, range: f64) -> f64 {
    let x0 = xs[i];
    let d_max = (x0 - xs[lo]).max(xs[hi - 1] - x0);
    let mut sw = 0.0;
    let mut swx = 0.0;
    let mut swy = 0.0;
    let weights: Vec<f64> = (lo..hi)
        .map(|j| {
            let w = if d_max > 0.0 { tricube((xs[j] - x0).abs() / d_max) } else { 1.0 };
            w * robust[j]
        })
        .collect();
    for (w, j) in weights.iter().zip(lo..hi) {
        sw += w;
        swx += w * xs[j];
        swy += w * ys[j];
    }
    if sw <= 0.0 {
        return ys[i];
    }
    let x_bar = swx / sw;
    let y_bar = swy / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (w, j) in weights.iter().zip(lo..hi) {
        let dx = xs[j] - x_bar;
        sxx += w * dx * dx;
        sxy += w * dx * (ys[j] - y_bar);
    }
    let spread = DEGENERATE_SPREAD * range;
    if sxx / sw <= spread * spread {
        return y_bar;
    }
    y_bar + sxy / sxx * (x0 - x_bar)
}

/// Robust locally linear smoothing of `ys` against strictly increasing `xs`.
///
/// Each point is fitted from its `ceil(frac * n)` nearest neighbors with
/// tricube distance weights. Each robustifying pass multiplies those weights
/// by the bisquare of the residuals scaled by six times their median absolute
/// value; a pass is skipped, and iteration stops, when that median is zero
/// (to roundoff).
pub fn lowess_fit(xs: &[f64], ys: &[f64], params: &LowessParams) -> Result<Vec<f64>, StatsError> {
    let n = xs.len();
    if n != ys.len() {
        return Err(StatsError::LengthMismatch(n, ys.len()));
    }
    if n < 3 {
        return Err(StatsError::TooFewPoints(n));
    }
    if !(params.frac > 0.0 && params.frac <= 1.0) {
        return Err(StatsError::Parameter(alloc::format!("frac {} outside (0, 1]", params.frac)));
    }
    for i in 0..n {
        if !xs[i].is_finite() || (i > 0 && xs[i] <= xs[i - 1]) {
            return Err(StatsError::UnsortedX(i));
        }
    }
    let k = params.neighbors(n);
    if k < 2 {
        return Err(StatsError::Bandwidth { frac: params.frac, k });
    }
    let range = xs[n - 1] - xs[0];
    let y_scale = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let windows: Vec<(usize, usize)> = (0..n).map(|i| window(xs, i, k)).collect();
    let mut robust = vec![1.0; n];
    let mut fitted = vec![0.0; n];
    for pass in 0..=params.iterations {
        for i in 0..n {
            let (lo, hi) = windows[i];
            fitted[i] = local_fit(xs, ys, &robust, lo, hi, i, range);
        }
        if pass == params.iterations {
            break;
        }
        let residuals: Vec<f64> = ys.iter().zip(&fitted).map(|(y, f)| y - f).collect();
        let mut abs: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
        let med = median(&mut abs);
        if med <= ZERO_RESIDUAL * y_scale {
            break;
        }
        for (w, r) in robust.iter_mut().zip(&residuals) {
            *w = bisquare(r / (6.0 * med));
        }
    }
    Ok(fitted)
}
