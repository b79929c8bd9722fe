//! Parametric count distributions.
//!
//! Seven families are supported: Poisson, negative binomial, binomial,
//! zero-inflated Poisson, zero-inflated binomial, beta-binomial, and the
//! Good distribution (PMF proportional to `q^x (x+1)^s`). Each distribution
//! owns an exact PMF, closed-form moments where they exist, a deterministic
//! inversion sampler over a cached CDF table, and a mean/dispersion-index
//! parameterization used to specify out-of-control alternatives.

use crate::error::{Error, Result};
use crate::stats::KahanSum;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

/// Tail mass dropped when truncating unbounded supports.
pub const TAIL_MASS: f64 = 1e-12;

/// Hard cap on any truncated support.
pub const MAX_SUPPORT: u64 = 100_000;

/// Family tag plus parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// Poisson with mean `mu > 0`.
    Poisson { mu: f64 },
    /// Negative binomial with `nu > 0` and success probability `pi in (0,1)`;
    /// counts failures, so the mean is `nu (1-pi) / pi`.
    NegBinomial { nu: f64, pi: f64 },
    /// Binomial on `{0,..,n}`.
    Binomial { n: u64, p: f64 },
    /// Zero-inflated Poisson: extra point mass `omega` at zero.
    ZiPoisson { omega: f64, lambda: f64 },
    /// Zero-inflated binomial.
    ZiBinomial { omega: f64, n: u64, p: f64 },
    /// Beta-binomial on `{0,..,n}` with shape `a, b > 0`.
    BetaBinomial { n: u64, a: f64, b: f64 },
    /// Good distribution: `p(x) ∝ q^x (x+1)^s` on the nonnegative integers.
    Good { q: f64, s: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Poisson { .. } => "Poisson",
            Family::NegBinomial { .. } => "NegBinomial",
            Family::Binomial { .. } => "Binomial",
            Family::ZiPoisson { .. } => "ZiPoisson",
            Family::ZiBinomial { .. } => "ZiBinomial",
            Family::BetaBinomial { .. } => "BetaBinomial",
            Family::Good { .. } => "Good",
        }
    }
}

/// Fieldless family tag, used by the mean/dispersion constructor and configs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    Poisson,
    NegBinomial,
    Binomial,
    ZiPoisson,
    ZiBinomial,
    BetaBinomial,
    Good,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Poisson => "Poisson",
            FamilyKind::NegBinomial => "NegBinomial",
            FamilyKind::Binomial => "Binomial",
            FamilyKind::ZiPoisson => "ZiPoisson",
            FamilyKind::ZiBinomial => "ZiBinomial",
            FamilyKind::BetaBinomial => "BetaBinomial",
            FamilyKind::Good => "Good",
        }
    }

    /// True for families whose support is `{0,..,n}`.
    pub fn is_bounded(self) -> bool {
        matches!(
            self,
            FamilyKind::Binomial | FamilyKind::ZiBinomial | FamilyKind::BetaBinomial
        )
    }
}

/// Which dispersion index applies to a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexKind {
    /// `I_P = variance / mean`, for unbounded counts.
    Poisson,
    /// `I_B = n * variance / (mean * (n - mean))`, for counts bounded by `n`.
    Binomial,
}

/// Mean, variance, and the family-appropriate dispersion index.
#[derive(Clone, Copy, Debug)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    pub dispersion_index: f64,
    pub index_kind: IndexKind,
}

/// A validated count distribution with cached moments and CDF table.
#[derive(Clone, Debug)]
pub struct CountDistribution {
    family: Family,
    moments: MomentSummary,
    /// Cumulative PMF over `0..cdf.len()`; the dropped tail is below
    /// [`TAIL_MASS`]. Sampling inverts this table.
    cdf: Vec<f64>,
    /// Log normalizing constant; only meaningful for the Good family.
    good_ln_norm: f64,
}

impl CountDistribution {
    pub fn poisson(mu: f64) -> Result<Self> {
        require(mu.is_finite() && mu > 0.0, "Poisson", "mu must be positive")?;
        Self::build(Family::Poisson { mu })
    }

    pub fn neg_binomial(nu: f64, pi: f64) -> Result<Self> {
        require(
            nu.is_finite() && nu > 0.0,
            "NegBinomial",
            "nu must be positive",
        )?;
        require(pi > 0.0 && pi < 1.0, "NegBinomial", "pi must lie in (0,1)")?;
        Self::build(Family::NegBinomial { nu, pi })
    }

    pub fn binomial(n: u64, p: f64) -> Result<Self> {
        require(n >= 1, "Binomial", "n must be at least 1")?;
        require((0.0..=1.0).contains(&p), "Binomial", "p must lie in [0,1]")?;
        Self::build(Family::Binomial { n, p })
    }

    pub fn zi_poisson(omega: f64, lambda: f64) -> Result<Self> {
        require(
            (0.0..=1.0).contains(&omega),
            "ZiPoisson",
            "omega must lie in [0,1]",
        )?;
        require(
            lambda.is_finite() && lambda > 0.0,
            "ZiPoisson",
            "lambda must be positive",
        )?;
        Self::build(Family::ZiPoisson { omega, lambda })
    }

    pub fn zi_binomial(omega: f64, n: u64, p: f64) -> Result<Self> {
        require(
            (0.0..=1.0).contains(&omega),
            "ZiBinomial",
            "omega must lie in [0,1]",
        )?;
        require(n >= 1, "ZiBinomial", "n must be at least 1")?;
        require(
            (0.0..=1.0).contains(&p),
            "ZiBinomial",
            "p must lie in [0,1]",
        )?;
        Self::build(Family::ZiBinomial { omega, n, p })
    }

    pub fn beta_binomial(n: u64, a: f64, b: f64) -> Result<Self> {
        require(n >= 1, "BetaBinomial", "n must be at least 1")?;
        require(
            a.is_finite() && a > 0.0,
            "BetaBinomial",
            "a must be positive",
        )?;
        require(
            b.is_finite() && b > 0.0,
            "BetaBinomial",
            "b must be positive",
        )?;
        Self::build(Family::BetaBinomial { n, a, b })
    }

    pub fn good(q: f64, s: f64) -> Result<Self> {
        require(q > 0.0 && q < 1.0, "Good", "q must lie in (0,1)")?;
        require(s.is_finite(), "Good", "s must be finite")?;
        Self::build(Family::Good { q, s })
    }

    /// Builds a distribution from its family tag and the target mean and
    /// dispersion index (`I_P` for unbounded families, `I_B` for bounded
    /// ones, which also need `n`).
    pub fn from_mean_dispersion(
        kind: FamilyKind,
        mean: f64,
        index: f64,
        n: Option<u64>,
    ) -> Result<Self> {
        let name = kind.name();
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::Infeasible {
                family: name,
                reason: "mean must be positive".into(),
            });
        }
        if !(index.is_finite() && index > 0.0) {
            return Err(Error::Infeasible {
                family: name,
                reason: "dispersion index must be positive".into(),
            });
        }
        let bounded_n = |n: Option<u64>| -> Result<u64> {
            let n = n.ok_or_else(|| Error::Infeasible {
                family: name,
                reason: "bounded family requires n".into(),
            })?;
            if mean >= n as f64 {
                return Err(Error::Infeasible {
                    family: name,
                    reason: format!("mean {mean} must be below n = {n}"),
                });
            }
            Ok(n)
        };
        match kind {
            FamilyKind::Poisson => {
                if (index - 1.0).abs() > 1e-8 {
                    return Err(Error::Infeasible {
                        family: name,
                        reason: format!("Poisson is equidispersed (I_P = 1), got I = {index}"),
                    });
                }
                Self::poisson(mean)
            }
            FamilyKind::NegBinomial => {
                if index <= 1.0 {
                    return Err(Error::Infeasible {
                        family: name,
                        reason: format!("requires overdispersion I_P > 1, got I = {index}"),
                    });
                }
                // I_P = 1/pi, so pi = 1/I and nu = mean / (I - 1).
                Self::neg_binomial(mean / (index - 1.0), 1.0 / index)
            }
            FamilyKind::Binomial => {
                let n = bounded_n(n)?;
                if (index - 1.0).abs() > 1e-8 {
                    return Err(Error::Infeasible {
                        family: name,
                        reason: format!("Binomial has I_B = 1, got I = {index}"),
                    });
                }
                Self::binomial(n, mean / n as f64)
            }
            FamilyKind::ZiPoisson => {
                if index < 1.0 {
                    return Err(Error::Infeasible {
                        family: name,
                        reason: format!("requires I_P >= 1, got I = {index}"),
                    });
                }
                // Solve (1-omega) lambda = mean and I_P = 1 + omega lambda.
                let lambda = mean + index - 1.0;
                let omega = (index - 1.0) / lambda;
                Self::zi_poisson(omega, lambda)
            }
            FamilyKind::ZiBinomial => {
                let n = bounded_n(n)?;
                if n < 2 {
                    return Err(Error::Infeasible {
                        family: name,
                        reason: "requires n >= 2".into(),
                    });
                }
                if index < 1.0 {
                    return Err(Error::Infeasible {
                        family: name,
                        reason: format!("requires I_B >= 1, got I = {index}"),
                    });
                }
                let nf = n as f64;
                // Mean of the binomial component before inflation.
                let m = (index * (nf - mean) + nf * (mean - 1.0)) / (nf - 1.0);
                if m >= nf {
                    return Err(Error::Infeasible {
                        family: name,
                        reason: format!("requires I_B < n, got I = {index} with n = {n}"),
                    });
                }
                if m <= 0.0 {
                    return Err(Error::Infeasible {
                        family: name,
                        reason: format!("binomial component mean {m} not positive"),
                    });
                }
                Self::zi_binomial(1.0 - mean / m, n, m / nf)
            }
            FamilyKind::BetaBinomial => {
                let n = bounded_n(n)?;
                if n < 2 {
                    return Err(Error::Infeasible {
                        family: name,
                        reason: "requires n >= 2".into(),
                    });
                }
                if index <= 1.0 || index >= n as f64 {
                    return Err(Error::Infeasible {
                        family: name,
                        reason: format!("requires 1 < I_B < n, got I = {index} with n = {n}"),
                    });
                }
                let nf = n as f64;
                let total = (nf - index) / (index - 1.0); // a + b
                let theta = mean / nf;
                Self::beta_binomial(n, theta * total, (1.0 - theta) * total)
            }
            FamilyKind::Good => {
                let (q, s) = solve_good(mean, index)?;
                Self::good(q, s)
            }
        }
    }

    fn build(family: Family) -> Result<Self> {
        let good_ln_norm = match family {
            Family::Good { q, s } => good_ln_norm(q, s),
            _ => 0.0,
        };
        let moments = compute_moments(&family, good_ln_norm);
        let cdf = build_cdf(&family, good_ln_norm)?;
        Ok(Self {
            family,
            moments,
            cdf,
            good_ln_norm,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn kind(&self) -> FamilyKind {
        match self.family {
            Family::Poisson { .. } => FamilyKind::Poisson,
            Family::NegBinomial { .. } => FamilyKind::NegBinomial,
            Family::Binomial { .. } => FamilyKind::Binomial,
            Family::ZiPoisson { .. } => FamilyKind::ZiPoisson,
            Family::ZiBinomial { .. } => FamilyKind::ZiBinomial,
            Family::BetaBinomial { .. } => FamilyKind::BetaBinomial,
            Family::Good { .. } => FamilyKind::Good,
        }
    }

    /// Upper support bound `n` for bounded families.
    pub fn bound(&self) -> Option<u64> {
        match self.family {
            Family::Binomial { n, .. }
            | Family::ZiBinomial { n, .. }
            | Family::BetaBinomial { n, .. } => Some(n),
            _ => None,
        }
    }

    /// Exact PMF at `x`. Zero beyond a bounded support.
    pub fn pmf(&self, x: u64) -> f64 {
        family_pmf(&self.family, self.good_ln_norm, x)
    }

    /// CDF at `x`, by summation of the PMF.
    pub fn cdf(&self, x: u64) -> f64 {
        if (x as usize) < self.cdf.len() {
            self.cdf[x as usize]
        } else {
            // Beyond the cached table only a sub-TAIL_MASS sliver remains.
            *self.cdf.last().expect("nonempty cdf table")
        }
    }

    pub fn moments(&self) -> MomentSummary {
        self.moments
    }

    pub fn mean(&self) -> f64 {
        self.moments.mean
    }

    /// Draws one count by inversion of the cached CDF table.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1) as u64
    }

    /// Smallest `x_max` whose upper tail mass is at most `eps`
    /// (the bound `n` for bounded families).
    pub fn support_truncation(&self, eps: f64) -> u64 {
        assert!(eps > 0.0 && eps < 1.0, "tail mass must lie in (0,1)");
        if let Some(n) = self.bound() {
            return n;
        }
        let mut cum = KahanSum::new();
        for x in 0..=MAX_SUPPORT {
            cum.add(self.pmf(x));
            if 1.0 - cum.value() <= eps {
                return x;
            }
        }
        MAX_SUPPORT
    }
}

fn require(ok: bool, family: &'static str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            family,
            reason: reason.into(),
        })
    }
}

// ---------------------------------------------------------------------------
// PMFs (log-space where needed; shared with the Markov-kernel code).

pub(crate) fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

pub(crate) fn pmf_poisson(mu: f64, x: u64) -> f64 {
    (x as f64 * mu.ln() - mu - ln_gamma(x as f64 + 1.0)).exp()
}

pub(crate) fn pmf_neg_binomial(nu: f64, pi: f64, x: u64) -> f64 {
    let xf = x as f64;
    (ln_gamma(nu + xf) - ln_gamma(nu) - ln_gamma(xf + 1.0) + nu * pi.ln() + xf * (1.0 - pi).ln())
        .exp()
}

pub(crate) fn pmf_binomial(n: u64, p: f64, x: u64) -> f64 {
    if x > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if x == n { 1.0 } else { 0.0 };
    }
    (ln_choose(n, x) + x as f64 * p.ln() + (n - x) as f64 * (1.0 - p).ln()).exp()
}

pub(crate) fn pmf_beta_binomial(n: u64, a: f64, b: f64, x: u64) -> f64 {
    if x > n {
        return 0.0;
    }
    let xf = x as f64;
    let nf = n as f64;
    let ln_beta = |u: f64, v: f64| ln_gamma(u) + ln_gamma(v) - ln_gamma(u + v);
    (ln_choose(n, x) + ln_beta(xf + a, nf - xf + b) - ln_beta(a, b)).exp()
}

fn family_pmf(family: &Family, good_ln_norm: f64, x: u64) -> f64 {
    match *family {
        Family::Poisson { mu } => pmf_poisson(mu, x),
        Family::NegBinomial { nu, pi } => pmf_neg_binomial(nu, pi, x),
        Family::Binomial { n, p } => pmf_binomial(n, p, x),
        Family::ZiPoisson { omega, lambda } => {
            let base = pmf_poisson(lambda, x);
            if x == 0 {
                omega + (1.0 - omega) * base
            } else {
                (1.0 - omega) * base
            }
        }
        Family::ZiBinomial { omega, n, p } => {
            let base = pmf_binomial(n, p, x);
            if x == 0 {
                omega + (1.0 - omega) * base
            } else {
                (1.0 - omega) * base
            }
        }
        Family::BetaBinomial { n, a, b } => pmf_beta_binomial(n, a, b, x),
        Family::Good { q, s } => {
            (x as f64 * q.ln() + s * ((x + 1) as f64).ln() - good_ln_norm).exp()
        }
    }
}

// ---------------------------------------------------------------------------
// Good-distribution internals.

/// Unnormalized log terms `x ln q + s ln(x+1)` summed by log-sum-exp.
/// Returns (ln_norm, usable term count).
fn good_scan(q: f64, s: f64) -> (f64, u64) {
    let lnq = q.ln();
    // Continuous mode of the log term; summation must pass it.
    let mode = if s > 0.0 {
        (s / -lnq - 1.0).max(0.0)
    } else {
        0.0
    };
    let past_mode = mode.ceil() as u64 + 1;
    let mut max_t = f64::NEG_INFINITY;
    let mut terms: Vec<f64> = Vec::with_capacity(64);
    let mut x = 0u64;
    loop {
        let t = x as f64 * lnq + s * ((x + 1) as f64).ln();
        terms.push(t);
        if t > max_t {
            max_t = t;
        }
        if (x >= past_mode && t < max_t - 46.0) || x >= MAX_SUPPORT {
            break;
        }
        x += 1;
    }
    let mut sum = KahanSum::new();
    for t in &terms {
        sum.add((t - max_t).exp());
    }
    (max_t + sum.value().ln(), x)
}

fn good_ln_norm(q: f64, s: f64) -> f64 {
    good_scan(q, s).0
}

/// Mean and variance of Good(q, s) by truncated summation.
fn good_moments(q: f64, s: f64) -> (f64, f64) {
    let (ln_norm, x_end) = good_scan(q, s);
    let lnq = q.ln();
    let mut m1 = KahanSum::new();
    let mut m2 = KahanSum::new();
    for x in 0..=x_end {
        let p = (x as f64 * lnq + s * ((x + 1) as f64).ln() - ln_norm).exp();
        let xf = x as f64;
        m1.add(xf * p);
        m2.add(xf * xf * p);
    }
    let mean = m1.value();
    (mean, m2.value() - mean * mean)
}

/// Finds (q, s) with the requested mean and dispersion index `I_P`.
///
/// Nested bisection: for fixed `s` the mean is increasing in `q` (monotone
/// likelihood ratio), and at the mean-matched `q(s)` the index decreases in
/// `s` toward the reachability boundary, where it diverges. An `s` whose
/// maximal mean (at `q -> 1`) falls short of the target is treated as
/// `I = inf`, which keeps the outer bracket ordered.
fn solve_good(mean: f64, index: f64) -> Result<(f64, f64)> {
    const Q_MAX: f64 = 1.0 - 1e-12;
    // Mean cannot be matched below this s; one expensive probe at Q_MAX.
    let solve_q = |s: f64| -> Option<f64> {
        if good_moments(Q_MAX, s).0 < mean {
            return None;
        }
        let (mut lo, mut hi) = (1e-12, Q_MAX);
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            if good_moments(mid, s).0 < mean {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Some(0.5 * (lo + hi))
    };
    let index_at = |s: f64| -> f64 {
        match solve_q(s) {
            None => f64::INFINITY,
            Some(q) => {
                let (m, v) = good_moments(q, s);
                v / m
            }
        }
    };

    let (mut s_lo, mut s_hi) = (-8.0, 8.0);
    // index_at is decreasing in s; broaden until the target is bracketed.
    while index_at(s_lo) < index {
        s_lo *= 2.0;
        if s_lo < -4096.0 {
            return Err(Error::Infeasible {
                family: "Good",
                reason: format!("dispersion index {index} too large at mean {mean}"),
            });
        }
    }
    while index_at(s_hi) > index {
        s_hi *= 2.0;
        if s_hi > 4096.0 {
            return Err(Error::Infeasible {
                family: "Good",
                reason: format!("dispersion index {index} too small at mean {mean}"),
            });
        }
    }
    let mut s_mid = 0.5 * (s_lo + s_hi);
    for _ in 0..100 {
        s_mid = 0.5 * (s_lo + s_hi);
        let i_mid = index_at(s_mid);
        if (i_mid - index).abs() < 1e-11 || s_hi - s_lo < 1e-13 {
            break;
        }
        if i_mid > index {
            s_lo = s_mid;
        } else {
            s_hi = s_mid;
        }
    }
    let q = solve_q(s_mid).ok_or_else(|| {
        Error::Numerical(format!(
            "Good parameter solve left the feasible region at s = {s_mid}"
        ))
    })?;
    let (m, v) = good_moments(q, s_mid);
    if (m - mean).abs() > 1e-8 * mean.max(1.0) || (v / m - index).abs() > 1e-8 * index.max(1.0) {
        return Err(Error::Numerical(format!(
            "Good parameter solve did not converge: got mean {m}, index {}",
            v / m
        )));
    }
    Ok((q, s_mid))
}

// ---------------------------------------------------------------------------
// Moments and CDF tables.

fn compute_moments(family: &Family, good_ln_norm: f64) -> MomentSummary {
    let (mean, variance, bound) = match *family {
        Family::Poisson { mu } => (mu, mu, None),
        Family::NegBinomial { nu, pi } => {
            let mean = nu * (1.0 - pi) / pi;
            (mean, mean / pi, None)
        }
        Family::Binomial { n, p } => {
            let nf = n as f64;
            (nf * p, nf * p * (1.0 - p), Some(n))
        }
        Family::ZiPoisson { omega, lambda } => {
            let mean = (1.0 - omega) * lambda;
            (mean, mean * (1.0 + omega * lambda), None)
        }
        Family::ZiBinomial { omega, n, p } => {
            let nf = n as f64;
            let mean = (1.0 - omega) * nf * p;
            let var = mean * (1.0 - p + nf * p) - mean * mean;
            (mean, var, Some(n))
        }
        Family::BetaBinomial { n, a, b } => {
            let nf = n as f64;
            let theta = a / (a + b);
            let var = nf * theta * (1.0 - theta) * (a + b + nf) / (a + b + 1.0);
            (nf * theta, var, Some(n))
        }
        Family::Good { q, s } => {
            let _ = good_ln_norm;
            let (m, v) = good_moments(q, s);
            (m, v, None)
        }
    };
    match bound {
        None => MomentSummary {
            mean,
            variance,
            dispersion_index: variance / mean,
            index_kind: IndexKind::Poisson,
        },
        Some(n) => {
            let nf = n as f64;
            MomentSummary {
                mean,
                variance,
                dispersion_index: nf * variance / (mean * (nf - mean)),
                index_kind: IndexKind::Binomial,
            }
        }
    }
}

fn build_cdf(family: &Family, good_ln_norm: f64) -> Result<Vec<f64>> {
    let cap = match family {
        Family::Binomial { n, .. }
        | Family::ZiBinomial { n, .. }
        | Family::BetaBinomial { n, .. } => *n,
        _ => MAX_SUPPORT,
    };
    let mut cum = KahanSum::new();
    let mut table = Vec::with_capacity(32);
    for x in 0..=cap {
        cum.add(family_pmf(family, good_ln_norm, x));
        table.push(cum.value().min(1.0));
        if 1.0 - cum.value() <= TAIL_MASS {
            return Ok(table);
        }
    }
    if cap == MAX_SUPPORT {
        return Err(Error::Numerical(format!(
            "{} tail mass {:.3e} still above {TAIL_MASS:.0e} at the support cap {MAX_SUPPORT}",
            family.name(),
            1.0 - cum.value(),
        )));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replication_stream;
    use approx::assert_relative_eq;
    use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete};

    /// Truncated-sum oracle for mean/variance, independent of `moments()`.
    fn summed_moments(d: &CountDistribution) -> (f64, f64) {
        let x_max = d.support_truncation(1e-14);
        let mut m1 = KahanSum::new();
        let mut m2 = KahanSum::new();
        for x in 0..=x_max {
            let p = d.pmf(x);
            m1.add(x as f64 * p);
            m2.add((x as f64) * (x as f64) * p);
        }
        (m1.value(), m2.value() - m1.value() * m1.value())
    }

    fn test_cases() -> Vec<CountDistribution> {
        vec![
            CountDistribution::poisson(2.0).unwrap(),
            CountDistribution::poisson(5.0).unwrap(),
            CountDistribution::neg_binomial(3.0, 0.6).unwrap(),
            CountDistribution::binomial(10, 0.2).unwrap(),
            CountDistribution::zi_poisson(0.25, 8.0 / 3.0).unwrap(),
            CountDistribution::zi_binomial(16.0 / 70.0, 10, 7.0 / 27.0).unwrap(),
            CountDistribution::beta_binomial(10, 2.5, 10.0).unwrap(),
            CountDistribution::from_mean_dispersion(FamilyKind::Good, 2.0, 0.5, None).unwrap(),
            CountDistribution::from_mean_dispersion(FamilyKind::Good, 5.0, 0.75, None).unwrap(),
        ]
    }

    #[test]
    fn pmf_matches_closed_form_corners() {
        let poi = CountDistribution::poisson(2.0).unwrap();
        assert_relative_eq!(poi.pmf(0), (-2.0f64).exp(), max_relative = 1e-12);

        let nb = CountDistribution::neg_binomial(3.0, 0.6).unwrap();
        assert_relative_eq!(nb.pmf(0), 0.216, max_relative = 1e-12);

        let bin = CountDistribution::binomial(10, 0.2).unwrap();
        assert_relative_eq!(bin.pmf(10), 1.024e-7, max_relative = 1e-10);
        assert_eq!(bin.pmf(11), 0.0);
    }

    #[test]
    fn pmf_cross_checks_against_statrs() {
        let poi = CountDistribution::poisson(2.0).unwrap();
        let sp = statrs::distribution::Poisson::new(2.0).unwrap();
        for x in 0..20u64 {
            assert_relative_eq!(poi.pmf(x), sp.pmf(x), max_relative = 1e-11);
        }
        let bin = CountDistribution::binomial(10, 0.2).unwrap();
        let sb = statrs::distribution::Binomial::new(0.2, 10).unwrap();
        for x in 0..=10u64 {
            assert_relative_eq!(bin.pmf(x), sb.pmf(x), max_relative = 1e-11);
        }
    }

    #[test]
    fn normalization_over_truncated_support() {
        for d in test_cases() {
            let x_max = d.support_truncation(1e-12);
            let mut sum = KahanSum::new();
            for x in 0..=x_max {
                let p = d.pmf(x);
                assert!(p >= 0.0, "{:?} pmf({x}) negative", d.family());
                sum.add(p);
            }
            let total = sum.value();
            assert!(
                (total - 1.0).abs() <= 1e-11,
                "{:?} sums to {total}",
                d.family()
            );
        }
    }

    #[test]
    fn closed_form_moments_match_summation() {
        for d in test_cases() {
            let (mean, var) = summed_moments(&d);
            let m = d.moments();
            assert_relative_eq!(m.mean, mean, max_relative = 1e-10);
            assert_relative_eq!(m.variance, var, max_relative = 1e-10);
        }
    }

    #[test]
    fn moment_examples() {
        let m = CountDistribution::poisson(2.0).unwrap().moments();
        assert_relative_eq!(m.mean, 2.0);
        assert_relative_eq!(m.variance, 2.0);
        assert_relative_eq!(m.dispersion_index, 1.0);

        let m = CountDistribution::neg_binomial(3.0, 0.6).unwrap().moments();
        assert_relative_eq!(m.mean, 2.0, max_relative = 1e-12);
        assert_relative_eq!(m.variance, 10.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(m.dispersion_index, 5.0 / 3.0, max_relative = 1e-12);

        let m = CountDistribution::binomial(10, 0.2).unwrap().moments();
        assert_relative_eq!(m.mean, 2.0);
        assert_relative_eq!(m.variance, 1.6, max_relative = 1e-12);
        assert_relative_eq!(m.dispersion_index, 1.0, max_relative = 1e-12);
        assert_eq!(m.index_kind, IndexKind::Binomial);
    }

    #[test]
    fn mean_dispersion_inversions() {
        let d =
            CountDistribution::from_mean_dispersion(FamilyKind::NegBinomial, 2.0, 5.0 / 3.0, None)
                .unwrap();
        match *d.family() {
            Family::NegBinomial { nu, pi } => {
                assert_relative_eq!(nu, 3.0, max_relative = 1e-12);
                assert_relative_eq!(pi, 0.6, max_relative = 1e-12);
            }
            _ => panic!("wrong family"),
        }

        let d =
            CountDistribution::from_mean_dispersion(FamilyKind::Poisson, 5.0, 1.0, None).unwrap();
        assert!(matches!(*d.family(), Family::Poisson { mu } if (mu - 5.0).abs() < 1e-12));

        let d =
            CountDistribution::from_mean_dispersion(FamilyKind::ZiPoisson, 2.0, 5.0 / 3.0, None)
                .unwrap();
        match *d.family() {
            Family::ZiPoisson { omega, lambda } => {
                assert_relative_eq!(lambda, 8.0 / 3.0, max_relative = 1e-12);
                assert_relative_eq!(omega, 0.25, max_relative = 1e-12);
            }
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn mean_dispersion_round_trips() {
        let cases: Vec<(FamilyKind, f64, f64, Option<u64>)> = vec![
            (FamilyKind::Poisson, 2.0, 1.0, None),
            (FamilyKind::NegBinomial, 2.0, 5.0 / 3.0, None),
            (FamilyKind::NegBinomial, 5.0, 5.0 / 2.0, None),
            (FamilyKind::ZiPoisson, 5.0, 5.0 / 3.0, None),
            (FamilyKind::Binomial, 2.0, 1.0, Some(10)),
            (FamilyKind::ZiBinomial, 2.0, 5.0 / 3.0, Some(10)),
            (FamilyKind::BetaBinomial, 5.0, 5.0 / 3.0, Some(10)),
            (FamilyKind::Good, 2.0, 0.5, None),
            (FamilyKind::Good, 5.0, 0.75, None),
            (FamilyKind::Good, 2.0, 1.5, None),
        ];
        for (kind, mean, index, n) in cases {
            let d = CountDistribution::from_mean_dispersion(kind, mean, index, n).unwrap();
            let m = d.moments();
            assert_relative_eq!(m.mean, mean, max_relative = 1e-8);
            assert_relative_eq!(m.dispersion_index, index, max_relative = 1e-8);
        }
    }

    #[test]
    fn infeasible_pairs_are_named() {
        let err = CountDistribution::from_mean_dispersion(FamilyKind::NegBinomial, 2.0, 0.8, None)
            .unwrap_err();
        assert!(matches!(
            err,
            Error::Infeasible {
                family: "NegBinomial",
                ..
            }
        ));

        let err =
            CountDistribution::from_mean_dispersion(FamilyKind::BetaBinomial, 2.0, 12.0, Some(10))
                .unwrap_err();
        assert!(err.to_string().contains("I_B < n"));

        let err =
            CountDistribution::from_mean_dispersion(FamilyKind::Binomial, 12.0, 1.0, Some(10))
                .unwrap_err();
        assert!(err.to_string().contains("below n"));
    }

    #[test]
    fn degenerate_samplers() {
        let mut rng = replication_stream(11, 0);
        let zip = CountDistribution::zi_poisson(1.0, 3.0).unwrap();
        assert!((0..200).all(|_| zip.sample(&mut rng) == 0));
        let bin = CountDistribution::binomial(10, 0.0).unwrap();
        assert!((0..200).all(|_| bin.sample(&mut rng) == 0));
    }

    #[test]
    fn poisson_sample_mean_within_clt_band() {
        let d = CountDistribution::poisson(2.0).unwrap();
        let mut rng = replication_stream(42, 0);
        let n = 1_000_000u64;
        let mut sum = 0u64;
        for _ in 0..n {
            sum += d.sample(&mut rng);
        }
        let mean = sum as f64 / n as f64;
        let band = 3.0 * (2.0f64 / n as f64).sqrt();
        assert!(
            (mean - 2.0).abs() < band,
            "mean {mean} outside 2 +/- {band}"
        );
    }

    #[test]
    fn support_truncation_matches_cumulative_oracle() {
        let bin = CountDistribution::binomial(10, 0.2).unwrap();
        assert_eq!(bin.support_truncation(0.5), 10);
        assert_eq!(bin.support_truncation(1e-12), 10);

        // Oracle: accumulate statrs PMF values directly.
        let d = CountDistribution::poisson(2.0).unwrap();
        let sp = statrs::distribution::Poisson::new(2.0).unwrap();
        let mut cum = 0.0;
        let mut expected = 0;
        for x in 0..200u64 {
            cum += sp.pmf(x);
            if 1.0 - cum <= 1e-12 {
                expected = x;
                break;
            }
        }
        assert_eq!(d.support_truncation(1e-12), expected);

        let good =
            CountDistribution::from_mean_dispersion(FamilyKind::Good, 2.0, 0.5, None).unwrap();
        let x_max = good.support_truncation(1e-12);
        assert!(x_max < MAX_SUPPORT, "Good truncation should be finite");
        let mut tail_start = KahanSum::new();
        for x in 0..=x_max {
            tail_start.add(good.pmf(x));
        }
        assert!(1.0 - tail_start.value() <= 1e-12 + 1e-15);
    }

    #[test]
    fn sampler_chi_square_gof() {
        // Seeded goodness-of-fit check over the 0.999-mass support.
        for (i, d) in test_cases().into_iter().enumerate() {
            let x_max = d.support_truncation(0.001);
            let mut rng = replication_stream(1234, i as u64);
            let draws = 1_000_000usize;
            let mut counts = vec![0u64; x_max as usize + 2];
            for _ in 0..draws {
                let x = d.sample(&mut rng).min(x_max + 1);
                counts[x as usize] += 1;
            }
            // Merge cells with tiny expectation into the tail.
            let mut stat = 0.0;
            let mut cells = 0usize;
            let mut tail_obs = 0.0;
            let mut tail_exp = 0.0;
            for x in 0..=x_max {
                let e = draws as f64 * d.pmf(x);
                let o = counts[x as usize] as f64;
                if e < 10.0 {
                    tail_obs += o;
                    tail_exp += e;
                } else {
                    stat += (o - e) * (o - e) / e;
                    cells += 1;
                }
            }
            tail_obs += counts[x_max as usize + 1] as f64;
            tail_exp += draws as f64 * (1.0 - d.cdf(x_max));
            if tail_exp > 0.0 {
                stat += (tail_obs - tail_exp) * (tail_obs - tail_exp) / tail_exp;
                cells += 1;
            }
            let df = (cells - 1) as f64;
            let crit = ChiSquared::new(df).unwrap().inverse_cdf(0.999);
            assert!(
                stat < crit,
                "{:?}: chi-square {stat:.2} exceeds critical {crit:.2} (df {df})",
                d.family()
            );
        }
    }

    #[test]
    fn good_solver_spans_under_and_overdispersion() {
        // At mean 2 the geometric case (s = 0) has I_P = 3, so I = 1/2 needs
        // s > 0 and I = 4 needs s < 0.
        let under =
            CountDistribution::from_mean_dispersion(FamilyKind::Good, 2.0, 0.5, None).unwrap();
        let over =
            CountDistribution::from_mean_dispersion(FamilyKind::Good, 2.0, 4.0, None).unwrap();
        match (under.family(), over.family()) {
            (&Family::Good { s: s_u, .. }, &Family::Good { s: s_o, .. }) => {
                assert!(s_u > 0.0, "underdispersion needs s > 0, got {s_u}");
                assert!(s_o < 0.0, "heavy overdispersion needs s < 0, got {s_o}");
            }
            _ => panic!("wrong families"),
        }
        let m = over.moments();
        assert_relative_eq!(m.mean, 2.0, max_relative = 1e-8);
        assert_relative_eq!(m.dispersion_index, 4.0, max_relative = 1e-8);
    }
}
