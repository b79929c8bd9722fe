//! Thinning operators and stationary AR(1)-type count process simulators.
//!
//! The three core models are the Poisson INAR(1) chain
//! `X_t = rho ∘ X_{t-1} + eps_t`, the negative-binomial IINAR(1) chain built
//! from iterated thinning, and the binomial AR(1) chain
//! `X_t = alpha ∘ X_{t-1} + beta ∘ (n - X_{t-1})`. Out-of-control variants
//! swap the innovation distribution (e.g. zero-inflated Poisson) or replace
//! the binomial thinnings by beta-binomial / zero-inflated-binomial
//! thinnings; their extra parameters are matched so that the stationary
//! marginal hits a requested mean and dispersion index.

use crate::dist::{CountDistribution, FamilyKind};
use crate::error::{Error, Result};
use rand::Rng;

/// Burn-in used when a model's stationary marginal has no closed form.
pub const DEFAULT_BURN_IN: u32 = 500;

// ---------------------------------------------------------------------------
// Thinning operators.

/// Binomial thinning: `theta ∘ x | x ~ Bin(x, theta)`.
pub fn binomial_thin<R: Rng + ?Sized>(x: u64, theta: f64, rng: &mut R) -> u64 {
    debug_assert!((0.0..=1.0).contains(&theta));
    if theta <= 0.0 {
        return 0;
    }
    if theta >= 1.0 {
        return x;
    }
    let mut k = 0;
    for _ in 0..x {
        if rng.random::<f64>() < theta {
            k += 1;
        }
    }
    k
}

/// Geometric draw counting failures before the first success,
/// `P(k) = pi (1-pi)^k`.
fn geometric<R: Rng + ?Sized>(pi: f64, rng: &mut R) -> u64 {
    if pi >= 1.0 {
        return 0;
    }
    let u = 1.0 - rng.random::<f64>(); // in (0, 1]
    (u.ln() / (1.0 - pi).ln()) as u64
}

/// Iterated thinning `rho ⊛_pi x = sum_{i=1}^{N} Y_i` with
/// `N | x ~ Bin(x, pi * rho)` and i.i.d. counting series
/// `Y_i ~ 1 + NB(1, pi)`, so that `E[rho ⊛_pi x | x] = rho * x`.
pub fn iterated_thin<R: Rng + ?Sized>(x: u64, rho: f64, pi: f64, rng: &mut R) -> u64 {
    let n = binomial_thin(x, pi * rho, rng);
    let mut total = n;
    for _ in 0..n {
        total += geometric(pi, rng);
    }
    total
}

/// Beta-binomial thinning: conditionally `BetaBinomial(x, a, b)` with mean
/// fraction `theta = a/(a+b)` and intra-class correlation `phi = 1/(a+b+1)`.
/// `phi = 0` degenerates to binomial thinning.
pub fn bb_thin<R: Rng + ?Sized>(x: u64, theta: f64, phi: f64, rng: &mut R) -> u64 {
    debug_assert!(theta > 0.0 && theta < 1.0);
    debug_assert!((0.0..1.0).contains(&phi));
    if x == 0 {
        return 0;
    }
    if phi <= 0.0 {
        return binomial_thin(x, theta, rng);
    }
    let total = 1.0 / phi - 1.0;
    let beta = rand_distr::Beta::new(theta * total, (1.0 - theta) * total)
        .expect("validated beta-binomial thinning parameters");
    let p: f64 = rng.sample(beta);
    binomial_thin(x, p, rng)
}

/// Zero-inflated binomial thinning: `0` with probability `omega`, otherwise a
/// `Bin(x, p)` draw, so the conditional mean is `(1-omega) p x`.
pub fn zib_thin<R: Rng + ?Sized>(x: u64, p: f64, omega: f64, rng: &mut R) -> u64 {
    debug_assert!((0.0..=1.0).contains(&p) && (0.0..1.0).contains(&omega));
    if rng.random::<f64>() < omega {
        0
    } else {
        binomial_thin(x, p, rng)
    }
}

// ---------------------------------------------------------------------------
// Process models.

/// How a binomial-thinning INAR(1) model draws its stationary start value.
#[derive(Clone, Debug)]
pub enum Stationary {
    /// Closed-form stationary marginal.
    Exact(CountDistribution),
    /// No closed form; run this many transitions from zero.
    BurnIn(u32),
}

/// A data-generating process for a count time series.
#[derive(Clone, Debug)]
pub enum ProcessModel {
    /// Serially independent draws from a marginal distribution.
    Iid { marginal: CountDistribution },
    /// `X_t = rho ∘ X_{t-1} + eps_t` with binomial thinning. Covers the
    /// Poisson INAR(1) chain (Poisson innovations, exact stationary
    /// marginal) and generic variants such as ZIP or Good innovations.
    BinThinInar1 {
        rho: f64,
        innovation: CountDistribution,
        stationary: Stationary,
    },
    /// `X_t = rho ⊛_pi X_{t-1} + eps_t` with NB(nu, pi) innovations and
    /// NB marginal.
    NbIinar1 {
        rho: f64,
        pi: f64,
        innovation: CountDistribution,
        marginal: CountDistribution,
    },
    /// `X_t = alpha ∘ X_{t-1} + beta ∘ (n - X_{t-1})` with Bin(n, mu/n)
    /// marginal.
    BinAr1 {
        n: u64,
        alpha: f64,
        beta: f64,
        marginal: CountDistribution,
    },
    /// BinAR(1) recursion with both thinnings replaced by beta-binomial
    /// thinnings sharing the extra-binomial parameter `phi`.
    BbAr1 {
        n: u64,
        alpha: f64,
        beta: f64,
        phi: f64,
    },
    /// BinAR(1) recursion with zero-inflated-binomial thinnings sharing the
    /// inflation `omega`; success probabilities are `alpha/(1-omega)` and
    /// `beta/(1-omega)` so the conditional means stay `alpha x` and
    /// `beta (n-x)`.
    ZibAr1 {
        n: u64,
        alpha: f64,
        beta: f64,
        omega: f64,
    },
}

/// `alpha`, `beta` of the BinAR(1)-type recursion for mean `mu` and lag-1
/// autocorrelation `rho`.
fn bin_ar1_coefficients(n: u64, mu: f64, rho: f64) -> Result<(f64, f64)> {
    let beta = (1.0 - rho) * mu / n as f64;
    let alpha = beta + rho;
    if !(beta > 0.0 && beta < 1.0 && alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter {
            family: "BinAR1",
            reason: format!("alpha = {alpha}, beta = {beta} must lie in (0,1)"),
        });
    }
    Ok((alpha, beta))
}

impl ProcessModel {
    pub fn iid(marginal: CountDistribution) -> Self {
        ProcessModel::Iid { marginal }
    }

    /// Poisson INAR(1) with mean `mu` and dependence `rho in (0,1)`.
    pub fn poi_inar1(mu: f64, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(ProcessModel::BinThinInar1 {
            rho,
            innovation: CountDistribution::poisson(mu * (1.0 - rho))?,
            stationary: Stationary::Exact(CountDistribution::poisson(mu)?),
        })
    }

    /// Binomial-thinning INAR(1) with an arbitrary innovation distribution;
    /// the stationary marginal is approximated by burn-in.
    pub fn generic_inar1(rho: f64, innovation: CountDistribution) -> Result<Self> {
        check_rho(rho)?;
        Ok(ProcessModel::BinThinInar1 {
            rho,
            innovation,
            stationary: Stationary::BurnIn(DEFAULT_BURN_IN),
        })
    }

    /// NB-IINAR(1) with marginal mean `mu`, marginal dispersion `I_P = 1 + mu/nu`,
    /// and dependence `rho`.
    pub fn nb_iinar1(mu: f64, nu: f64, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let pi = nu / (mu * (1.0 - rho) + nu);
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::InvalidParameter {
                family: "NbIinar1",
                reason: format!("pi = {pi} must lie in (0,1)"),
            });
        }
        Ok(ProcessModel::NbIinar1 {
            rho,
            pi,
            innovation: CountDistribution::neg_binomial(nu, pi)?,
            marginal: CountDistribution::neg_binomial(nu, nu / (nu + mu))?,
        })
    }

    /// BinAR(1) with marginal `Bin(n, mu/n)` and dependence `rho`.
    pub fn bin_ar1(n: u64, mu: f64, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let (alpha, beta) = bin_ar1_coefficients(n, mu, rho)?;
        Ok(ProcessModel::BinAr1 {
            n,
            alpha,
            beta,
            marginal: CountDistribution::binomial(n, mu / n as f64)?,
        })
    }

    /// BB-AR(1): BinAR(1) recursion with beta-binomial thinnings whose shared
    /// extra-binomial parameter is matched so the stationary marginal has
    /// dispersion index `index` at mean `mu`.
    pub fn bb_ar1(n: u64, mu: f64, index: f64, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let (alpha, beta) = bin_ar1_coefficients(n, mu, rho)?;
        let nf = n as f64;
        let var = index * mu * (nf - mu) / nf;
        // Stationary variance: var = rho^2 var + E[Var(alpha-thin | X)]
        //                                      + E[Var(beta-thin | n-X)],
        // with Var(BB-thin | x) = theta(1-theta) x (1 + (x-1) phi).
        let m2 = var + mu * mu - mu; // E[X(X-1)]
        let m2c = var + (nf - mu) * (nf - mu) - (nf - mu); // E[(n-X)(n-X-1)]
        let base = alpha * (1.0 - alpha) * mu + beta * (1.0 - beta) * (nf - mu);
        let slope = alpha * (1.0 - alpha) * m2 + beta * (1.0 - beta) * m2c;
        let phi = (var * (1.0 - rho * rho) - base) / slope;
        if !(0.0..1.0).contains(&phi) {
            return Err(Error::Infeasible {
                family: "BbAr1",
                reason: format!(
                    "index {index} needs extra-binomial parameter phi = {phi:.4} outside [0,1)"
                ),
            });
        }
        Ok(ProcessModel::BbAr1 {
            n,
            alpha,
            beta,
            phi,
        })
    }

    /// ZIB-AR(1): BinAR(1) recursion with zero-inflated-binomial thinnings
    /// whose shared inflation is matched so the stationary marginal has
    /// dispersion index `index` at mean `mu`.
    pub fn zib_ar1(n: u64, mu: f64, index: f64, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let (alpha, beta) = bin_ar1_coefficients(n, mu, rho)?;
        let nf = n as f64;
        let var = index * mu * (nf - mu) / nf;
        let omega_max = 1.0 - alpha.max(beta);
        // Var(ZIB-thin | x) = theta x (1 - p) + theta p omega x^2 with
        // p = theta/(1-omega); residual of the stationary variance equation.
        let residual = |omega: f64| -> f64 {
            let pa = alpha / (1.0 - omega);
            let pb = beta / (1.0 - omega);
            let va = alpha * mu * (1.0 - pa) + alpha * pa * omega * (var + mu * mu);
            let vb =
                beta * (nf - mu) * (1.0 - pb) + beta * pb * omega * (var + (nf - mu) * (nf - mu));
            rho * rho * var + va + vb - var
        };
        if residual(0.0) > 0.0 {
            return Err(Error::Infeasible {
                family: "ZibAr1",
                reason: format!("index {index} below the binomial-thinning level"),
            });
        }
        if residual(omega_max - 1e-9) < 0.0 {
            return Err(Error::Infeasible {
                family: "ZibAr1",
                reason: format!("index {index} unreachable: inflation capped at {omega_max:.4}"),
            });
        }
        let (mut lo, mut hi) = (0.0, omega_max - 1e-9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 {
                break;
            }
        }
        Ok(ProcessModel::ZibAr1 {
            n,
            alpha,
            beta,
            omega: 0.5 * (lo + hi),
        })
    }

    /// Resolves a model from the marginal specification `(family, mean,
    /// dispersion index, n)` plus dependence `rho` (`rho = 0` gives i.i.d.
    /// draws).
    ///
    /// For ZIP and Good marginals with `rho > 0`, a binomial-thinning
    /// INAR(1) chain is used whose innovation has mean `(1-rho) mean` and
    /// dispersion `I_eps = index (1+rho) - rho`, which makes the stationary
    /// marginal match `(mean, index)`.
    pub fn from_marginal(
        kind: FamilyKind,
        mean: f64,
        index: f64,
        n: Option<u64>,
        rho: f64,
    ) -> Result<Self> {
        if rho == 0.0 {
            return Ok(ProcessModel::iid(CountDistribution::from_mean_dispersion(
                kind, mean, index, n,
            )?));
        }
        check_rho(rho)?;
        match kind {
            FamilyKind::Poisson => Self::poi_inar1(mean, rho),
            FamilyKind::NegBinomial => {
                if index <= 1.0 {
                    return Err(Error::Infeasible {
                        family: "NegBinomial",
                        reason: format!("requires I_P > 1, got {index}"),
                    });
                }
                Self::nb_iinar1(mean, mean / (index - 1.0), rho)
            }
            FamilyKind::Binomial => {
                let n = require_n(n)?;
                Self::bin_ar1(n, mean, rho)
            }
            FamilyKind::ZiPoisson | FamilyKind::Good => {
                let innovation_index = index * (1.0 + rho) - rho;
                if innovation_index <= 0.0 {
                    return Err(Error::Infeasible {
                        family: kind.name(),
                        reason: format!(
                            "index {index} too small for rho = {rho}: innovation \
                             dispersion {innovation_index} not positive"
                        ),
                    });
                }
                let innovation = CountDistribution::from_mean_dispersion(
                    kind,
                    mean * (1.0 - rho),
                    innovation_index,
                    None,
                )?;
                Self::generic_inar1(rho, innovation)
            }
            FamilyKind::BetaBinomial => Self::bb_ar1(require_n(n)?, mean, index, rho),
            FamilyKind::ZiBinomial => Self::zib_ar1(require_n(n)?, mean, index, rho),
        }
    }

    /// Upper support bound for bounded chains.
    pub fn bound(&self) -> Option<u64> {
        match self {
            ProcessModel::Iid { marginal } => marginal.bound(),
            ProcessModel::BinThinInar1 { .. } | ProcessModel::NbIinar1 { .. } => None,
            ProcessModel::BinAr1 { n, .. }
            | ProcessModel::BbAr1 { n, .. }
            | ProcessModel::ZibAr1 { n, .. } => Some(*n),
        }
    }

    /// One Markov transition from `x_prev`.
    pub fn step<R: Rng + ?Sized>(&self, x_prev: u64, rng: &mut R) -> u64 {
        match self {
            ProcessModel::Iid { marginal } => marginal.sample(rng),
            ProcessModel::BinThinInar1 {
                rho, innovation, ..
            } => binomial_thin(x_prev, *rho, rng) + innovation.sample(rng),
            ProcessModel::NbIinar1 {
                rho,
                pi,
                innovation,
                ..
            } => iterated_thin(x_prev, *rho, *pi, rng) + innovation.sample(rng),
            ProcessModel::BinAr1 { n, alpha, beta, .. } => {
                assert!(x_prev <= *n, "state {x_prev} outside {{0,..,{n}}}");
                binomial_thin(x_prev, *alpha, rng) + binomial_thin(n - x_prev, *beta, rng)
            }
            ProcessModel::BbAr1 {
                n,
                alpha,
                beta,
                phi,
            } => {
                assert!(x_prev <= *n, "state {x_prev} outside {{0,..,{n}}}");
                bb_thin(x_prev, *alpha, *phi, rng) + bb_thin(n - x_prev, *beta, *phi, rng)
            }
            ProcessModel::ZibAr1 {
                n,
                alpha,
                beta,
                omega,
            } => {
                assert!(x_prev <= *n, "state {x_prev} outside {{0,..,{n}}}");
                let pa = alpha / (1.0 - omega);
                let pb = beta / (1.0 - omega);
                zib_thin(x_prev, pa, *omega, rng) + zib_thin(n - x_prev, pb, *omega, rng)
            }
        }
    }

    /// A draw from the stationary marginal (burn-in where no closed form
    /// exists).
    pub fn init_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            ProcessModel::Iid { marginal } => marginal.sample(rng),
            ProcessModel::BinThinInar1 { stationary, .. } => match stationary {
                Stationary::Exact(marginal) => marginal.sample(rng),
                Stationary::BurnIn(steps) => self.burn_in(*steps, rng),
            },
            ProcessModel::NbIinar1 { marginal, .. } => marginal.sample(rng),
            ProcessModel::BinAr1 { marginal, .. } => marginal.sample(rng),
            ProcessModel::BbAr1 { .. } | ProcessModel::ZibAr1 { .. } => {
                self.burn_in(DEFAULT_BURN_IN, rng)
            }
        }
    }

    fn burn_in<R: Rng + ?Sized>(&self, steps: u32, rng: &mut R) -> u64 {
        let mut x = 0;
        for _ in 0..steps {
            x = self.step(x, rng);
        }
        x
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            family: "ProcessModel",
            reason: format!("rho = {rho} must lie in (0,1) for AR(1) models"),
        })
    }
}

fn require_n(n: Option<u64>) -> Result<u64> {
    n.ok_or_else(|| Error::Infeasible {
        family: "ProcessModel",
        reason: "bounded family requires n".into(),
    })
}

// ---------------------------------------------------------------------------
// Scenarios with a change point.

/// In-control model, optional out-of-control model, and the change point
/// `tau >= 1`: observations at `t < tau` follow the in-control model, those
/// at `t >= tau` the out-of-control one. `tau = 1` is the zero-state case.
#[derive(Clone, Debug)]
pub struct ScenarioDgp {
    in_control: ProcessModel,
    out_of_control: Option<ProcessModel>,
    change_point: u64,
}

impl ScenarioDgp {
    /// Scenario that stays in control forever.
    pub fn in_control(model: ProcessModel) -> Self {
        Self {
            in_control: model,
            out_of_control: None,
            change_point: 1,
        }
    }

    pub fn with_change(
        in_control: ProcessModel,
        out_of_control: ProcessModel,
        change_point: u64,
    ) -> Result<Self> {
        if change_point < 1 {
            return Err(Error::ModelMismatch(
                "change point must be at least 1".into(),
            ));
        }
        if let Some(n_ooc) = out_of_control.bound() {
            match in_control.bound() {
                Some(n_ic) if n_ic == n_ooc => {}
                _ => {
                    return Err(Error::ModelMismatch(format!(
                        "out-of-control chain is bounded by n = {n_ooc} but the \
                         in-control model does not share that bound"
                    )));
                }
            }
        }
        Ok(Self {
            in_control,
            out_of_control: Some(out_of_control),
            change_point,
        })
    }

    pub fn in_control_model(&self) -> &ProcessModel {
        &self.in_control
    }

    /// The model governing the transition into time `t >= 1`.
    pub fn model_at(&self, t: u64) -> &ProcessModel {
        match &self.out_of_control {
            Some(ooc) if t >= self.change_point => ooc,
            _ => &self.in_control,
        }
    }

    /// Simulates a series of the given length. `X_0` is drawn from the
    /// in-control stationary marginal and not included in the output.
    pub fn generate<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<u64> {
        let mut x = self.in_control.init_stationary(rng);
        let mut out = Vec::with_capacity(len);
        for t in 1..=len as u64 {
            x = self.model_at(t).step(x, rng);
            out.push(x);
        }
        out
    }
}
