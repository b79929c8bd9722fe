//! Zero-state run lengths: simulation, ARL estimation, control-limit
//! calibration, and exact Markov-chain ARLs for Shewhart charts.
//!
//! Protocol: the chart statistics start at their design values, `X_0` is
//! drawn from the stationary in-control marginal but never compared against
//! the limits, and monitoring starts at `t = 1`. An out-of-control scenario
//! applies its model from the change point onward (`tau = 1` by default).
//!
//! Every replication draws from its own `(seed, index)` stream and the
//! reduction is index-ordered, so estimates are bit-identical across runs
//! and across worker counts.

use crate::chart::{ChartDesign, Limits};
use crate::dist::{pmf_beta_binomial, pmf_binomial, pmf_neg_binomial, CountDistribution};
use crate::error::{Error, Result};
use crate::process::{ProcessModel, ScenarioDgp, Stationary};
use crate::rng::replication_stream;
use crate::stats::KahanSum;
use rand::Rng;
use rayon::prelude::*;

/// Monte-Carlo ARL estimate.
#[derive(Clone, Copy, Debug)]
pub struct ArlEstimate {
    /// Mean run length (censored runs counted at the cap).
    pub arl: f64,
    /// Standard error, sample SD / sqrt(R).
    pub se: f64,
    pub replications: usize,
    /// Runs that reached the cap without an alarm.
    pub censored: usize,
    pub cap: u64,
}

impl ArlEstimate {
    /// True when censoring occurred, making `arl` a lower bound.
    pub fn is_lower_bound(&self) -> bool {
        self.censored > 0
    }
}

/// Replication budget for ARL estimation.
#[derive(Clone, Copy, Debug)]
pub struct ArlConfig {
    pub replications: usize,
    pub cap: u64,
    pub seed: u64,
}

impl Default for ArlConfig {
    fn default() -> Self {
        Self {
            replications: 10_000,
            cap: 100_000,
            seed: 1,
        }
    }
}

/// Time of the first alarm, or `(cap, censored = true)`.
pub fn simulate_run_length<R: Rng + ?Sized>(
    design: &ChartDesign,
    scenario: &ScenarioDgp,
    rng: &mut R,
    cap: u64,
) -> Result<(u64, bool)> {
    let mut x = scenario.in_control_model().init_stationary(rng);
    let mut state = design.init_state();
    for t in 1..=cap {
        x = scenario.model_at(t).step(x, rng);
        let step = design.update(&state, x)?;
        if step.alarm {
            return Ok((t, false));
        }
        state = step.state;
    }
    Ok((cap, true))
}

/// Mean and standard error of the run length over independent replications.
pub fn estimate_arl(
    design: &ChartDesign,
    scenario: &ScenarioDgp,
    cfg: &ArlConfig,
) -> Result<ArlEstimate> {
    if cfg.replications == 0 {
        return Err(Error::EmptyInput("replication count"));
    }
    if cfg.cap == 0 {
        return Err(Error::EmptyInput("run-length cap"));
    }
    let runs: Vec<(u64, bool)> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_stream(cfg.seed, i as u64);
            simulate_run_length(design, scenario, &mut rng, cfg.cap)
        })
        .collect::<Result<_>>()?;
    let mut sum = KahanSum::new();
    let mut censored = 0usize;
    for &(len, cens) in &runs {
        sum.add(len as f64);
        censored += usize::from(cens);
    }
    let arl = sum.value() / runs.len() as f64;
    let se = if runs.len() > 1 {
        let mut sq = KahanSum::new();
        for &(len, _) in &runs {
            let d = len as f64 - arl;
            sq.add(d * d);
        }
        (sq.value() / (runs.len() - 1) as f64 / runs.len() as f64).sqrt()
    } else {
        0.0
    };
    Ok(ArlEstimate {
        arl,
        se,
        replications: runs.len(),
        censored,
        cap: cfg.cap,
    })
}

// ---------------------------------------------------------------------------
// Control-limit calibration.

/// A chart design minus its limits; calibration fills in the symmetric
/// half-width.
#[derive(Clone, Debug)]
pub enum DesignTemplate {
    Shewhart {
        in_control: CountDistribution,
    },
    Ewma {
        in_control: CountDistribution,
        lambda: f64,
    },
    Stein {
        in_control: CountDistribution,
        weight: crate::chart::WeightFunction,
        lambda: f64,
    },
}

impl DesignTemplate {
    /// Instantiates the design with symmetric limits `center -/+ l`.
    pub fn with_half_width(&self, l: f64) -> Result<ChartDesign> {
        let spec = crate::chart::LimitSpec::Symmetric(l);
        match self {
            DesignTemplate::Shewhart { in_control } => {
                ChartDesign::shewhart(in_control.clone(), spec)
            }
            DesignTemplate::Ewma { in_control, lambda } => {
                ChartDesign::ewma(in_control.clone(), *lambda, spec)
            }
            DesignTemplate::Stein {
                in_control,
                weight,
                lambda,
            } => ChartDesign::stein(in_control.clone(), weight.clone(), *lambda, spec),
        }
    }
}

/// Calibration targets and stopping rules.
#[derive(Clone, Copy, Debug)]
pub struct CalibrationConfig {
    pub target_arl0: f64,
    pub replications: usize,
    pub cap: u64,
    pub seed: u64,
    /// Accept when |ARL - target| <= se_tolerance * SE.
    pub se_tolerance: f64,
    /// Alternatively stop when the bracket is this narrow.
    pub bracket_resolution: f64,
    pub max_iterations: usize,
}

impl CalibrationConfig {
    pub fn new(target_arl0: f64, seed: u64) -> Self {
        Self {
            target_arl0,
            replications: 10_000,
            cap: 100_000,
            seed,
            se_tolerance: 2.0,
            bracket_resolution: 1e-4,
            max_iterations: 60,
        }
    }
}

/// Which stopping rule ended the calibration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    WithinTolerance,
    BracketResolved,
}

#[derive(Clone, Debug)]
pub struct CalibrationResult {
    /// Calibrated symmetric half-width.
    pub half_width: f64,
    /// In-control ARL achieved at `half_width`.
    pub achieved: ArlEstimate,
    /// Number of ARL evaluations performed.
    pub iterations: usize,
    pub stop: StopRule,
    /// Every evaluated `(L, ARL)` pair, in evaluation order.
    pub history: Vec<(f64, f64)>,
}

/// Finds the symmetric half-width whose in-control ARL meets the target.
///
/// Bisection on `L` with common random numbers: every candidate is evaluated
/// with the same seed, so the simulated count paths are shared and the
/// achieved ARL is nondecreasing in `L` by construction.
pub fn calibrate_limit(
    template: &DesignTemplate,
    in_control: &ProcessModel,
    cfg: &CalibrationConfig,
) -> Result<CalibrationResult> {
    if cfg.target_arl0.is_nan() || cfg.target_arl0 <= 1.0 {
        return Err(Error::Calibration(format!(
            "target ARL0 = {} must exceed 1",
            cfg.target_arl0
        )));
    }
    if cfg.target_arl0 >= cfg.cap as f64 {
        return Err(Error::Calibration(format!(
            "target ARL0 = {} not below the run-length cap {}",
            cfg.target_arl0, cfg.cap
        )));
    }
    let scenario = ScenarioDgp::in_control(in_control.clone());
    let arl_cfg = ArlConfig {
        replications: cfg.replications,
        cap: cfg.cap,
        seed: cfg.seed,
    };
    let mut history: Vec<(f64, f64)> = Vec::new();
    let evaluate = |l: f64, history: &mut Vec<(f64, f64)>| -> Result<ArlEstimate> {
        let est = estimate_arl(&template.with_half_width(l)?, &scenario, &arl_cfg)?;
        history.push((l, est.arl));
        Ok(est)
    };
    let target = cfg.target_arl0;
    let close_enough = |est: &ArlEstimate| (est.arl - target).abs() <= cfg.se_tolerance * est.se;

    // Grow the upper bracket geometrically until the ARL reaches the target.
    let mut lo = 0.0f64;
    let mut hi = 0.25f64;
    let mut hi_est = evaluate(hi, &mut history)?;
    loop {
        if close_enough(&hi_est) {
            return Ok(CalibrationResult {
                half_width: hi,
                achieved: hi_est,
                iterations: history.len(),
                stop: StopRule::WithinTolerance,
                history,
            });
        }
        if hi_est.arl >= target {
            break;
        }
        if hi > 1e6 {
            return Err(Error::Calibration(format!(
                "in-control ARL stuck at {:.1} (censored {}/{}) with L = {hi:.3e}; \
                 target {target} unreachable",
                hi_est.arl, hi_est.censored, hi_est.replications
            )));
        }
        lo = hi;
        hi *= 2.0;
        hi_est = evaluate(hi, &mut history)?;
    }
    let mut best = (hi, hi_est);

    // Bisect; keep ARL(lo) < target <= ARL(hi).
    let mut stop = StopRule::BracketResolved;
    while history.len() < cfg.max_iterations {
        if hi - lo <= cfg.bracket_resolution {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let est = evaluate(mid, &mut history)?;
        if (est.arl - target).abs() < (best.1.arl - target).abs() {
            best = (mid, est);
        }
        if close_enough(&est) {
            stop = StopRule::WithinTolerance;
            best = (mid, est);
            break;
        }
        if est.arl >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (half_width, achieved) = best;
    Ok(CalibrationResult {
        half_width,
        achieved,
        iterations: history.len(),
        stop,
        history,
    })
}

// ---------------------------------------------------------------------------
// Exact Markov-chain ARL for Shewhart charts.

/// Exact ARL of a Shewhart chart (the counts themselves plotted against
/// `limits`) on a Markov count chain.
///
/// With non-alarm states `NA = {x : LCL <= x <= UCL}`, transition matrix `Q`
/// restricted to `NA`, and `a` solving `(I - Q) a = 1`,
///
/// ```text
/// ARL = 1 + sum_x p_stat(x) sum_{y in NA} P(x, y) a_y
/// ```
///
/// where `X_0 ~ p_stat` is not monitored. The state space is truncated where
/// the stationary mass drops below `eps`.
pub fn exact_arl_markov(limits: &Limits, model: &ProcessModel, eps: f64) -> Result<f64> {
    if !limits.ucl.is_finite() {
        return Err(Error::Numerical(
            "exact Markov ARL needs a finite upper control limit".into(),
        ));
    }
    let na_lo = limits.lcl.max(0.0).ceil() as u64;
    let na_hi = limits.ucl.floor() as u64;
    if na_hi.saturating_sub(na_lo) > 2_000 {
        return Err(Error::Numerical(format!(
            "non-alarm band [{na_lo}, {na_hi}] too wide for a dense solve"
        )));
    }
    let (p_stat, x_max) = stationary_distribution(model, eps, na_hi)?;
    let non_alarm: Vec<u64> = (na_lo..=na_hi.min(x_max)).collect();

    // a_y = expected further run length from non-alarm state y.
    let a = if non_alarm.is_empty() {
        Vec::new()
    } else {
        let m = non_alarm.len();
        let mut i_minus_q = nalgebra::DMatrix::<f64>::zeros(m, m);
        for (i, &x) in non_alarm.iter().enumerate() {
            let row = transition_row(model, x, x_max);
            for (j, &y) in non_alarm.iter().enumerate() {
                let q = row[y as usize];
                i_minus_q[(i, j)] = if i == j { 1.0 - q } else { -q };
            }
        }
        let rhs = nalgebra::DVector::<f64>::from_element(m, 1.0);
        let solved = i_minus_q
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular (I - Q) system".into()))?;
        // Valid expected run lengths are finite and at least 1; anything else
        // means the alarm region is (numerically) unreachable.
        if solved.iter().any(|&v| !v.is_finite() || v < 1.0 - 1e-9) {
            return Err(Error::Numerical(
                "(I - Q) solve produced invalid expected run lengths; the alarm \
                 region may be unreachable"
                    .into(),
            ));
        }
        solved.iter().copied().collect()
    };

    let mut arl = KahanSum::new();
    for (x, &px) in p_stat.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        let row = transition_row(model, x as u64, x_max);
        let mut cond = KahanSum::new();
        for (j, &y) in non_alarm.iter().enumerate() {
            cond.add(row[y as usize] * a[j]);
        }
        arl.add(px * cond.value());
    }
    Ok(1.0 + arl.value())
}

/// Stationary distribution over `0..=x_max`, normalized. Closed-form
/// marginals are used where the model has one; otherwise the truncated
/// kernel is iterated to its fixed point.
fn stationary_distribution(
    model: &ProcessModel,
    eps: f64,
    min_cover: u64,
) -> Result<(Vec<f64>, u64)> {
    let closed_form = match model {
        ProcessModel::Iid { marginal } => Some(marginal),
        ProcessModel::BinThinInar1 {
            stationary: Stationary::Exact(m),
            ..
        } => Some(m),
        ProcessModel::NbIinar1 { marginal, .. } => Some(marginal),
        ProcessModel::BinAr1 { marginal, .. } => Some(marginal),
        _ => None,
    };
    if let Some(marginal) = closed_form {
        // Bounded chains have no states beyond n; unbounded ones must at
        // least represent every requested non-alarm state.
        let x_max = match model.bound() {
            Some(n) => n,
            None => marginal.support_truncation(eps).max(min_cover),
        };
        let mut p: Vec<f64> = (0..=x_max).map(|x| marginal.pmf(x)).collect();
        normalize(&mut p);
        return Ok((p, x_max));
    }
    // No closed form: fixed-point iteration on the truncated kernel.
    let mut x_max = match model.bound() {
        Some(n) => n,
        None => {
            let innovation_span = match model {
                ProcessModel::BinThinInar1 { innovation, .. } => innovation.support_truncation(eps),
                _ => 32,
            };
            (3 * innovation_span + 20).max(min_cover)
        }
    };
    for _ in 0..6 {
        let rows: Vec<Vec<f64>> = (0..=x_max)
            .map(|x| transition_row(model, x, x_max))
            .collect();
        let m = x_max as usize + 1;
        let mut p = vec![1.0 / m as f64; m];
        for _ in 0..100_000 {
            let mut next = vec![0.0; m];
            for (x, row) in rows.iter().enumerate() {
                let px = p[x];
                if px == 0.0 {
                    continue;
                }
                for (y, &q) in row.iter().enumerate() {
                    next[y] += px * q;
                }
            }
            normalize(&mut next);
            let delta = p
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            p = next;
            if delta < 1e-14 {
                break;
            }
        }
        // Accept once the top tail really is negligible.
        let tail: f64 = p[m.saturating_sub(3)..].iter().sum();
        if model.bound().is_some() || tail <= eps {
            return Ok((p, x_max));
        }
        x_max = x_max * 3 / 2 + 10;
    }
    Err(Error::Numerical(
        "stationary distribution did not fit the truncated state space".into(),
    ))
}

fn normalize(p: &mut [f64]) {
    let total: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= total;
    }
}

/// One transition row `P(x, 0..=y_max)` of the chain.
fn transition_row(model: &ProcessModel, x: u64, y_max: u64) -> Vec<f64> {
    let len = y_max as usize + 1;
    match model {
        ProcessModel::Iid { marginal } => (0..=y_max).map(|y| marginal.pmf(y)).collect(),
        ProcessModel::BinThinInar1 {
            rho, innovation, ..
        } => {
            let thin: Vec<f64> = (0..=x.min(y_max))
                .map(|k| pmf_binomial(x, *rho, k))
                .collect();
            convolve_with(&thin, |j| innovation.pmf(j), len)
        }
        ProcessModel::NbIinar1 {
            rho,
            pi,
            innovation,
            ..
        } => {
            // Iterated thinning: N ~ Bin(x, pi rho) survivors, each adding
            // 1 + NB(1, pi); the sum of k shifted geometrics is k + NB(k, pi).
            let mut thin = vec![0.0; len];
            for k in 0..=x {
                let pk = pmf_binomial(x, pi * rho, k);
                if k == 0 {
                    thin[0] += pk;
                    continue;
                }
                for t in k..=y_max {
                    thin[t as usize] += pk * pmf_neg_binomial(k as f64, *pi, t - k);
                }
            }
            convolve_with(&thin, |j| innovation.pmf(j), len)
        }
        ProcessModel::BinAr1 { n, alpha, beta, .. } => {
            let a: Vec<f64> = (0..=x).map(|k| pmf_binomial(x, *alpha, k)).collect();
            convolve_with(&a, |j| pmf_binomial(n - x, *beta, j), len)
        }
        ProcessModel::BbAr1 {
            n,
            alpha,
            beta,
            phi,
        } => {
            let total = 1.0 / phi - 1.0;
            let bb = |m: u64, theta: f64, k: u64| {
                pmf_beta_binomial(m, theta * total, (1.0 - theta) * total, k)
            };
            let a: Vec<f64> = (0..=x).map(|k| bb(x, *alpha, k)).collect();
            convolve_with(&a, |j| bb(n - x, *beta, j), len)
        }
        ProcessModel::ZibAr1 {
            n,
            alpha,
            beta,
            omega,
        } => {
            let pa = alpha / (1.0 - omega);
            let pb = beta / (1.0 - omega);
            let zib = |m: u64, p: f64, k: u64| {
                let base = (1.0 - omega) * pmf_binomial(m, p, k);
                if k == 0 {
                    omega + base
                } else {
                    base
                }
            };
            let a: Vec<f64> = (0..=x).map(|k| zib(x, pa, k)).collect();
            convolve_with(&a, |j| zib(n - x, pb, j), len)
        }
    }
}

/// Convolution of a finite PMF with a PMF given by a function, truncated to
/// `len` entries. Mass falling beyond `len` is dropped (it belongs to alarm
/// states above the truncation).
fn convolve_with<F: Fn(u64) -> f64>(a: &[f64], b: F, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (k, &pa) in a.iter().enumerate() {
        if pa == 0.0 || k >= len {
            continue;
        }
        for (y, slot) in out.iter_mut().enumerate().skip(k) {
            *slot += pa * b((y - k) as u64);
        }
    }
    out
}
