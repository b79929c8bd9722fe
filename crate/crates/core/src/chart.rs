//! Chart statistics as pure, stepwise state machines.
//!
//! Three chart types are provided:
//!
//! * Shewhart c/np charts plotting the raw counts,
//! * the ordinary EWMA chart `Z_t = lambda X_t + (1-lambda) Z_{t-1}` with
//!   `Z_0 = mu_0` and limits `mu_0 -/+ L`,
//! * Stein EWMA charts, which smooth three empirical moments
//!
//!   ```text
//!   A_t = lambda X_t f(X_t)      + (1-lambda) A_{t-1},   A_0 = E0[X f(X)]
//!   B_t = lambda b(X_t) f(X_t+1) + (1-lambda) B_{t-1},   B_0 = E0[b(X) f(X+1)]
//!   C_t = lambda X_t             + (1-lambda) C_{t-1},   C_0 = mu_0
//!   ```
//!
//!   with `b(x) = 1`, `nu + x`, or `n - x` for the Poisson, NB, and binomial
//!   variants, and plot the ratio statistic that the matching Stein identity
//!   pins at 1 under in-control conditions:
//!
//!   ```text
//!   Poi:  Z = A / (B C)
//!   NB:   Z = (nu + C) A / (B C)
//!   Bin:  Z = (n  - C) A / (B C)
//!   ```
//!
//!   Limits take the symmetric form `1 -/+ L`.
//!
//! An alarm is raised on strict violation: `z < LCL` or `z > UCL`.
//!
//! `B_t` and `C_t` stay strictly positive for every input (`lambda < 1` and
//! `f >= 0`), so the ratio is always defined; under pathological inputs
//! where both decay (an all-zero series with `f(1) = 0`, say) the statistic
//! may grow without bound. No clamping is applied: such runs simply alarm.

use crate::dist::{CountDistribution, Family};
use crate::error::{Error, Result};
use crate::stats::KahanSum;

/// Tail mass used when evaluating in-control expectations.
const BASELINE_TAIL: f64 = 1e-15;

// ---------------------------------------------------------------------------
// Weight functions.

/// The weight `f` plugged into the Stein statistics.
///
/// The standard choices target specific departures from the in-control
/// model: `Linear` (overdispersion), `Root` (zero inflation), `Inverse`
/// (underdispersion at low means), and `ShiftedPmf` (the in-control PMF
/// shifted down, for underdispersion at larger means).
#[derive(Clone, Debug)]
pub enum WeightFunction {
    /// `f(x) = |x - 1|`
    Linear,
    /// `f(x) = |x - 1|^(1/4)`
    Root,
    /// `f(x) = 1 / (x + 1)`
    Inverse,
    /// `f(x) = p0(x + shift)` for a base PMF `p0`.
    ShiftedPmf { base: CountDistribution, shift: u64 },
    /// Explicit values; `tail` applies beyond the table (an error if absent).
    Table { values: Vec<f64>, tail: Option<f64> },
}

impl WeightFunction {
    /// Shifted in-control PMF with the default shift of 2.
    pub fn shifted_pmf(base: CountDistribution) -> Self {
        WeightFunction::ShiftedPmf { base, shift: 2 }
    }

    pub fn eval(&self, x: u64) -> Result<f64> {
        match self {
            WeightFunction::Linear => Ok((x as f64 - 1.0).abs()),
            WeightFunction::Root => Ok((x as f64 - 1.0).abs().powf(0.25)),
            WeightFunction::Inverse => Ok(1.0 / (x as f64 + 1.0)),
            WeightFunction::ShiftedPmf { base, shift } => Ok(base.pmf(x + shift)),
            WeightFunction::Table { values, tail } => values
                .get(x as usize)
                .copied()
                .or(*tail)
                .ok_or(Error::WeightDomain { x }),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            WeightFunction::Linear => "linear",
            WeightFunction::Root => "root",
            WeightFunction::Inverse => "inverse",
            WeightFunction::ShiftedPmf { .. } => "shifted-pmf",
            WeightFunction::Table { .. } => "table",
        }
    }

    /// Checks the structural requirements on `f` over the in-control
    /// support: nonnegative, finite, not constant, and not identically zero
    /// on the positive integers.
    fn validate_for(&self, in_control: &CountDistribution) -> Result<()> {
        if let WeightFunction::Table { values, .. } = self {
            if values.is_empty() {
                return Err(Error::InvalidWeight("empty weight table".into()));
            }
        }
        let x_max = in_control.support_truncation(BASELINE_TAIL).max(2) + 1;
        let mut first = None;
        let mut constant = true;
        let mut zero_on_positive = true;
        for x in 0..=x_max {
            let v = self.eval(x)?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidWeight(format!(
                    "f({x}) = {v} must be finite and nonnegative"
                )));
            }
            match first {
                None => first = Some(v),
                Some(f0) if v != f0 => constant = false,
                _ => {}
            }
            if x >= 1 && v > 0.0 {
                zero_on_positive = false;
            }
        }
        if constant {
            return Err(Error::InvalidWeight(
                "f is constant on the in-control support".into(),
            ));
        }
        if zero_on_positive {
            return Err(Error::InvalidWeight(
                "f vanishes on all positive counts".into(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Designs.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartKind {
    Shewhart,
    Ewma,
    SteinPoi,
    SteinNb,
    SteinBin,
}

impl ChartKind {
    pub fn is_stein(self) -> bool {
        matches!(
            self,
            ChartKind::SteinPoi | ChartKind::SteinNb | ChartKind::SteinBin
        )
    }
}

/// Alarm thresholds. Infinite values disable a side.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub lcl: f64,
    pub ucl: f64,
}

/// How limits are specified at construction.
#[derive(Clone, Copy, Debug)]
pub enum LimitSpec {
    /// Symmetric band `center -/+ L` around the chart's center line.
    Symmetric(f64),
    /// Explicit thresholds.
    Explicit { lcl: f64, ucl: f64 },
}

/// In-control baselines of the smoothed statistics.
#[derive(Clone, Copy, Debug)]
pub struct Baselines {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
}

/// An immutable chart design: kind, smoothing, in-control model, weight,
/// and limits. All in-control quantities (`mu_0`, `nu`, `n`, baselines) are
/// frozen at construction and never re-estimated.
#[derive(Clone, Debug)]
pub struct ChartDesign {
    kind: ChartKind,
    lambda: f64,
    in_control: CountDistribution,
    weight: Option<WeightFunction>,
    limits: Limits,
    mu0: f64,
    baselines: Baselines,
}

impl ChartDesign {
    /// Shewhart chart plotting the counts themselves (the c-chart for
    /// unbounded counts, the np-chart for bounded ones).
    pub fn shewhart(in_control: CountDistribution, limits: LimitSpec) -> Result<Self> {
        let mu0 = in_control.mean();
        let limits = resolve_limits(limits, mu0)?;
        Ok(Self {
            kind: ChartKind::Shewhart,
            lambda: 1.0,
            in_control,
            weight: None,
            limits,
            mu0,
            baselines: Baselines {
                a0: 0.0,
                b0: 0.0,
                c0: mu0,
            },
        })
    }

    /// Ordinary EWMA chart centered at `mu_0`. `lambda = 1` reduces to the
    /// Shewhart chart.
    pub fn ewma(in_control: CountDistribution, lambda: f64, limits: LimitSpec) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidDesign(format!(
                "EWMA smoothing lambda = {lambda} must lie in (0,1]"
            )));
        }
        let mu0 = in_control.mean();
        let limits = resolve_limits(limits, mu0)?;
        Ok(Self {
            kind: ChartKind::Ewma,
            lambda,
            in_control,
            weight: None,
            limits,
            mu0,
            baselines: Baselines {
                a0: 0.0,
                b0: 0.0,
                c0: mu0,
            },
        })
    }

    /// Stein EWMA chart centered at 1. The variant (Poisson, NB, binomial)
    /// follows from the in-control family; `lambda` must be below 1 so that
    /// `B_t` stays positive even where `f(x+1) = 0`.
    pub fn stein(
        in_control: CountDistribution,
        weight: WeightFunction,
        lambda: f64,
        limits: LimitSpec,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidDesign(format!(
                "Stein EWMA smoothing lambda = {lambda} must lie in (0,1)"
            )));
        }
        let kind = match in_control.family() {
            Family::Poisson { .. } => ChartKind::SteinPoi,
            Family::NegBinomial { .. } => ChartKind::SteinNb,
            Family::Binomial { .. } => ChartKind::SteinBin,
            other => {
                return Err(Error::InvalidDesign(format!(
                    "Stein charts require a Poisson, negative-binomial, or binomial \
                     in-control model, got {}",
                    other.name()
                )))
            }
        };
        weight.validate_for(&in_control)?;
        let baselines = stein_baselines(&in_control, &weight)?;
        let limits = resolve_limits(limits, 1.0)?;
        let mu0 = in_control.mean();
        Ok(Self {
            kind,
            lambda,
            in_control,
            weight: Some(weight),
            limits,
            mu0,
            baselines,
        })
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn in_control(&self) -> &CountDistribution {
        &self.in_control
    }

    pub fn weight(&self) -> Option<&WeightFunction> {
        self.weight.as_ref()
    }

    /// Center line: `mu_0` for Shewhart/EWMA charts, 1 for Stein charts.
    pub fn center(&self) -> f64 {
        if self.kind.is_stein() {
            1.0
        } else {
            self.mu0
        }
    }

    pub fn baselines(&self) -> Baselines {
        self.baselines
    }

    /// Initial chart state.
    pub fn init_state(&self) -> ChartState {
        ChartState {
            t: 0,
            a: self.baselines.a0,
            b: self.baselines.b0,
            c: self.baselines.c0,
            z: self.center(),
        }
    }

    /// Applies one observation: the exact recursion, the plotted statistic,
    /// and the strict-limit alarm check.
    pub fn update(&self, state: &ChartState, x: u64) -> Result<ChartStep> {
        if let Some(n) = self.in_control.bound() {
            if x > n {
                return Err(Error::CountOutOfRange { x, n });
            }
        }
        let lambda = self.lambda;
        let xf = x as f64;
        let mut next = ChartState {
            t: state.t + 1,
            ..*state
        };
        let z = match self.kind {
            ChartKind::Shewhart => xf,
            ChartKind::Ewma => lambda * xf + (1.0 - lambda) * state.z,
            ChartKind::SteinPoi | ChartKind::SteinNb | ChartKind::SteinBin => {
                let f = self.weight.as_ref().expect("stein design has a weight");
                let fx = f.eval(x)?;
                let fx1 = f.eval(x + 1)?;
                let b_term = match self.kind {
                    ChartKind::SteinPoi => fx1,
                    ChartKind::SteinNb => (self.nu() + xf) * fx1,
                    ChartKind::SteinBin => (self.n() as f64 - xf) * fx1,
                    _ => unreachable!(),
                };
                next.a = lambda * xf * fx + (1.0 - lambda) * state.a;
                next.b = lambda * b_term + (1.0 - lambda) * state.b;
                next.c = lambda * xf + (1.0 - lambda) * state.c;
                match self.kind {
                    ChartKind::SteinPoi => next.a / (next.b * next.c),
                    ChartKind::SteinNb => (self.nu() + next.c) * next.a / (next.b * next.c),
                    ChartKind::SteinBin => (self.n() as f64 - next.c) * next.a / (next.b * next.c),
                    _ => unreachable!(),
                }
            }
        };
        next.z = z;
        let alarm = z < self.limits.lcl || z > self.limits.ucl;
        Ok(ChartStep {
            state: next,
            z,
            alarm,
        })
    }

    fn nu(&self) -> f64 {
        match *self.in_control.family() {
            Family::NegBinomial { nu, .. } => nu,
            _ => unreachable!("nu only queried on NB designs"),
        }
    }

    fn n(&self) -> u64 {
        self.in_control
            .bound()
            .expect("n only queried on binomial designs")
    }
}

fn resolve_limits(spec: LimitSpec, center: f64) -> Result<Limits> {
    let limits = match spec {
        LimitSpec::Symmetric(l) => {
            if l.is_nan() || l <= 0.0 {
                return Err(Error::InvalidDesign(format!(
                    "half-width L = {l} must be positive"
                )));
            }
            Limits {
                lcl: center - l,
                ucl: center + l,
            }
        }
        LimitSpec::Explicit { lcl, ucl } => Limits { lcl, ucl },
    };
    if limits.lcl.is_nan() || limits.ucl.is_nan() || limits.lcl >= limits.ucl {
        return Err(Error::InvalidDesign(format!(
            "LCL = {} must lie below UCL = {}",
            limits.lcl, limits.ucl
        )));
    }
    Ok(limits)
}

// ---------------------------------------------------------------------------
// State and series evaluation.

/// Running chart statistics. For Shewhart/EWMA charts only `t` and `z` are
/// meaningful; Stein charts also carry the smoothed moments.
#[derive(Clone, Copy, Debug)]
pub struct ChartState {
    pub t: u64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub z: f64,
}

/// Result of one chart update.
#[derive(Clone, Copy, Debug)]
pub struct ChartStep {
    pub state: ChartState,
    pub z: f64,
    pub alarm: bool,
}

/// One evaluated observation of a series run.
#[derive(Clone, Copy, Debug)]
pub struct SeriesPoint {
    pub t: u64,
    pub count: u64,
    pub z: f64,
    pub alarm: bool,
}

/// Full fold of a series through a chart.
#[derive(Clone, Debug)]
pub struct SeriesResult {
    pub points: Vec<SeriesPoint>,
    pub first_alarm: Option<u64>,
}

/// Runs a whole recorded series through the chart, reporting every plotted
/// statistic and the first alarm time (1-indexed).
pub fn run_series(design: &ChartDesign, counts: &[u64]) -> Result<SeriesResult> {
    if counts.is_empty() {
        return Err(Error::EmptyInput("count series"));
    }
    let mut state = design.init_state();
    let mut points = Vec::with_capacity(counts.len());
    let mut first_alarm = None;
    for (i, &x) in counts.iter().enumerate() {
        let step = design.update(&state, x)?;
        state = step.state;
        let t = i as u64 + 1;
        points.push(SeriesPoint {
            t,
            count: x,
            z: step.z,
            alarm: step.alarm,
        });
        if step.alarm && first_alarm.is_none() {
            first_alarm = Some(t);
        }
    }
    Ok(SeriesResult {
        points,
        first_alarm,
    })
}

/// In-control baselines `(A_0, B_0, C_0)` of the Stein statistics for the
/// given distribution and weight, by truncated summation. The family picks
/// the `B`-moment: `E0[f(X+1)]` (Poisson), `E0[(nu+X) f(X+1)]` (NB), or
/// `E0[(n-X) f(X+1)]` (binomial).
pub fn stein_baselines(dist: &CountDistribution, weight: &WeightFunction) -> Result<Baselines> {
    let b_factor: Box<dyn Fn(f64) -> f64> = match *dist.family() {
        Family::Poisson { .. } => Box::new(|_| 1.0),
        Family::NegBinomial { nu, .. } => Box::new(move |x| nu + x),
        Family::Binomial { n, .. } => Box::new(move |x| n as f64 - x),
        ref other => {
            return Err(Error::InvalidDesign(format!(
                "Stein baselines are defined for Poisson, negative-binomial, or \
                 binomial models, got {}",
                other.name()
            )))
        }
    };
    let x_max = dist.support_truncation(BASELINE_TAIL);
    let mut a0 = KahanSum::new();
    let mut b0 = KahanSum::new();
    for x in 0..=x_max {
        let p = dist.pmf(x);
        a0.add(x as f64 * weight.eval(x)? * p);
        b0.add(b_factor(x as f64) * weight.eval(x + 1)? * p);
    }
    let (a0, b0) = (a0.value(), b0.value());
    if !(a0 > 0.0 && b0 > 0.0) {
        return Err(Error::InvalidWeight(format!(
            "weight gives degenerate baselines A0 = {a0}, B0 = {b0}"
        )));
    }
    Ok(Baselines {
        a0,
        b0,
        c0: dist.mean(),
    })
}
