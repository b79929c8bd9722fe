//! Small numerical helpers: compensated summation and sample statistics.

/// Kahan compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Sample mean (compensated).
pub fn sample_mean(xs: &[f64]) -> f64 {
    let mut s = KahanSum::new();
    for &x in xs {
        s.add(x);
    }
    s.value() / xs.len() as f64
}

/// Unbiased sample variance (two-pass, compensated).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = sample_mean(xs);
    let mut s = KahanSum::new();
    for &x in xs {
        let d = x - m;
        s.add(d * d);
    }
    s.value() / (xs.len() - 1) as f64
}

/// Sample autocorrelation at the given lag.
pub fn sample_autocorrelation(xs: &[f64], lag: usize) -> f64 {
    assert!(lag < xs.len());
    let m = sample_mean(xs);
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for (i, &x) in xs.iter().enumerate() {
        let d = x - m;
        den.add(d * d);
        if i + lag < xs.len() {
            num.add(d * (xs[i + lag] - m));
        }
    }
    num.value() / den.value()
}

/// Sample dispersion index for unbounded counts: s^2 / mean.
pub fn sample_dispersion_unbounded(xs: &[f64]) -> f64 {
    sample_variance(xs) / sample_mean(xs)
}

/// Sample dispersion index for counts bounded by `n`:
/// n * s^2 / (mean * (n - mean)).
pub fn sample_dispersion_bounded(xs: &[f64], n: u64) -> f64 {
    let m = sample_mean(xs);
    let n = n as f64;
    n * sample_variance(xs) / (m * (n - m))
}
