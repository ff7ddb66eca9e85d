//! Interval estimates and compensated sums.

use serde::Serialize;

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MeanSd {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return MeanSd::default();
        }
        let mean = neumaier(xs.iter().copied()) / n as f64;
        let var = if n > 1 {
            neumaier(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64
        } else {
            0.0
        };
        MeanSd { n, mean, sd: var.sqrt() }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sd / (self.n as f64).sqrt()
        }
    }
}

/// Ratio of sums `sum(a) / (sum(a) + sum(b))` with a delta-method interval.
///
/// Pairs `(a_i, b_i)` come from independent replicas.
pub fn share_interval(pairs: &[(f64, f64)], z: f64) -> (f64, f64, f64) {
    let n = pairs.len() as f64;
    let sa = neumaier(pairs.iter().map(|p| p.0));
    let st = neumaier(pairs.iter().map(|p| p.0 + p.1));
    if st == 0.0 {
        return (f64::NAN, 0.0, 1.0);
    }
    let s = sa / st;
    // linearised residuals a_i - s * t_i
    let mt = st / n;
    let var = neumaier(pairs.iter().map(|&(a, b)| {
        let r = a - s * (a + b);
        r * r
    })) / (n * (n - 1.0).max(1.0));
    let half = z * var.sqrt() / mt;
    (s, (s - half).max(0.0), (s + half).min(1.0))
}

/// Neumaier-compensated sum.
pub fn neumaier(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = ScaledSum::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Compensated accumulator.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScaledSum {
    sum: f64,
    comp: f64,
}

impl ScaledSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &ScaledSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn scale(&mut self, f: f64) {
        self.sum *= f;
        self.comp *= f;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
