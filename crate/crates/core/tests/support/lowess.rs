//! Brute-force weighted least squares, written without reference to the
//! engine's windowing or centering.

pub struct Oracle {
    pub frac: f64,
    pub passes: u32,
}

impl Oracle {
    fn neighbours(&self, xs: &[f64], i: usize) -> Vec<usize> {
        let n = xs.len();
        let mut k = 0;
        while (k as f64) < self.frac * n as f64 - 1e-9 {
            k += 1;
        }
        let k = k.min(n);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| {
            let da = (xs[a] - xs[i]).abs();
            let db = (xs[b] - xs[i]).abs();
            da.partial_cmp(&db).unwrap().then(xs[a].partial_cmp(&xs[b]).unwrap())
        });
        idx.truncate(k);
        idx
    }

    fn fit_point(&self, xs: &[f64], ys: &[f64], rw: &[f64], i: usize) -> f64 {
        let nb = self.neighbours(xs, i);
        let dmax = nb.iter().map(|&j| (xs[j] - xs[i]).abs()).fold(0.0, f64::max);
        let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &j in &nb {
            let u = if dmax > 0.0 { (xs[j] - xs[i]).abs() / dmax } else { 0.0 };
            let tri = if u < 1.0 { (1.0 - u.powi(3)).powi(3) } else { 0.0 };
            let w = tri * rw[j];
            s0 += w;
            s1 += w * xs[j];
            s2 += w * xs[j] * xs[j];
            t0 += w * ys[j];
            t1 += w * xs[j] * ys[j];
        }
        if s0 == 0.0 {
            return ys[i];
        }
        let det = s0 * s2 - s1 * s1;
        let range = xs[xs.len() - 1] - xs[0];
        if det <= s0 * s0 * (1e-3 * range).powi(2) {
            return t0 / s0;
        }
        let intercept = (t0 * s2 - s1 * t1) / det;
        let slope = (s0 * t1 - s1 * t0) / det;
        intercept + slope * xs[i]
    }

    pub fn fit(&self, xs: &[f64], ys: &[f64]) -> Vec<f64> {
        let n = xs.len();
        let mut rw = vec![1.0; n];
        let mut fit: Vec<f64> = (0..n).map(|i| self.fit_point(xs, ys, &rw, i)).collect();
        for _ in 0..self.passes {
            let mut abs: Vec<f64> = (0..n).map(|i| (ys[i] - fit[i]).abs()).collect();
            abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let med = if n % 2 == 1 { abs[n / 2] } else { (abs[n / 2 - 1] + abs[n / 2]) / 2.0 };
            let ymax = ys.iter().map(|y| y.abs()).fold(0.0, f64::max);
            if med <= 1e-12 * ymax {
                break;
            }
            for i in 0..n {
                let u = (ys[i] - fit[i]) / (6.0 * med);
                rw[i] = if u.abs() < 1.0 { (1.0 - u * u).powi(2) } else { 0.0 };
            }
            fit = (0..n).map(|i| self.fit_point(xs, ys, &rw, i)).collect();
        }
        fit
    }
}
