//! Streaming moments with exact pairwise merge, plus goodness-of-fit helpers.

use num_complex::Complex64;

/// Welford accumulator for real samples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combine.
    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.n as f64 * w;
        self.n = n;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Welford accumulator for complex samples; `m2` tracks Σ|z − mean|².
/// Also tracks the modulus of every sample for diamagnetic companions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexStats {
    pub n: u64,
    pub mean: Complex64,
    pub m2: f64,
    pub abs: RunningStats,
}

impl ComplexStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Push a sample together with its coupled modulus (usually `z.norm()`).
    pub fn push_with_abs(&mut self, z: Complex64, abs: f64) {
        self.n += 1;
        let delta = z - self.mean;
        self.mean += delta / self.n as f64;
        let delta2 = z - self.mean;
        self.m2 += delta.re * delta2.re + delta.im * delta2.im;
        self.abs.push(abs);
    }

    pub fn push(&mut self, z: Complex64) {
        self.push_with_abs(z, z.norm());
    }

    pub fn merge(&mut self, other: &ComplexStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta.norm_sqr() * self.n as f64 * w;
        self.n = n;
        self.abs.merge(&other.abs);
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// z-score of an estimate against a reference; zero error with exact match gives 0.
pub fn z_score(estimate: f64, reference: f64, stderr: f64) -> f64 {
    let diff = estimate - reference;
    if stderr > 0.0 {
        diff / stderr
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// Asymptotic Kolmogorov survival function P(K > x).
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test; returns (statistic D, p-value).
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    (d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d))
}

/// Two-sample Kolmogorov–Smirnov test; returns (statistic D, p-value).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut xa: Vec<f64> = a.to_vec();
    let mut xb: Vec<f64> = b.to_vec();
    xa.sort_by(|p, q| p.total_cmp(q));
    xb.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let sn = ne.sqrt();
    (d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d))
}

/// Pearson correlation of two equally long samples.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Whether values sampled at ascending parameters vanish as the parameter
/// goes to 0: identically zero, or non-decreasing in the parameter (within
/// three joint standard errors) with log-log slope above 0.1 at the small end.
pub fn vanishes_at_zero(params: &[f64], values: &[f64], stderr: &[f64]) -> bool {
    if values.iter().all(|&v| v == 0.0) {
        return true;
    }
    let mut idx: Vec<usize> = (0..params.len().min(values.len())).collect();
    idx.sort_by(|&a, &b| params[a].total_cmp(&params[b]));
    let se = |k: usize| stderr.get(k).copied().unwrap_or(0.0);
    let monotone = idx.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        values[a] <= values[b] + 3.0 * (se(a) + se(b)) + 1e-12 * values[b].abs()
    });
    if !monotone || idx.len() < 2 {
        return false;
    }
    let (a, b) = (idx[0], idx[1]);
    if values[a] <= 0.0 {
        return values[b] >= values[a];
    }
    let slope = (values[b] / values[a]).ln() / (params[b] / params[a]).ln();
    slope > 0.1
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, -2.0, 7.5, 3.25];
        let s: RunningStats = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 4.0;
        assert!((s.mean - mean).abs() < 1e-14);
        assert!((s.variance() - var).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_survival_known_points() {
        // Reference values of the Kolmogorov distribution.
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn vanishing_verdicts() {
        let p = [0.01, 0.1, 1.0];
        assert!(vanishes_at_zero(&p, &[0.0, 0.0, 0.0], &[]));
        assert!(vanishes_at_zero(&p, &[0.01, 0.1, 1.0], &[]));
        assert!(!vanishes_at_zero(&p, &[1.0, 1.0, 1.0], &[]));
        assert!(!vanishes_at_zero(&p, &[2.0, 1.0, 0.5], &[]));
    }

    proptest! {
        #[test]
        fn merge_is_order_independent(xs in proptest::collection::vec(-1e3f64..1e3, 2..200), split in 1usize..199) {
            let split = split.min(xs.len() - 1);
            let mut whole = ComplexStats::new();
            for &x in &xs { whole.push(Complex64::new(x, 0.5 * x)); }
            let mut a = ComplexStats::new();
            let mut b = ComplexStats::new();
            for &x in &xs[..split] { a.push(Complex64::new(x, 0.5 * x)); }
            for &x in &xs[split..] { b.push(Complex64::new(x, 0.5 * x)); }
            let mut ab = a; ab.merge(&b);
            let mut ba = b; ba.merge(&a);
            let scale = 1.0 + whole.mean.norm();
            prop_assert!((ab.mean - whole.mean).norm() <= 1e-10 * scale);
            prop_assert!((ba.mean - whole.mean).norm() <= 1e-10 * scale);
            let vs = 1.0 + whole.variance();
            prop_assert!((ab.variance() - whole.variance()).abs() <= 1e-9 * vs);
            prop_assert!((ba.variance() - whole.variance()).abs() <= 1e-9 * vs);
            prop_assert_eq!(ab.n, whole.n);
        }
    }
}
