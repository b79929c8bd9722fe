//! JSON job configuration shared by the subcommands.
//!
//! One document describes a chart, the in-control process, and (optionally)
//! an out-of-control process plus the Monte-Carlo budget:
//!
//! ```json
//! {
//!   "chart": {
//!     "kind": "stein",
//!     "weight": { "kind": "linear" },
//!     "lambda": 0.1,
//!     "limits": { "l": 0.848 }
//!   },
//!   "in_control": { "family": "poisson", "mean": 2.1, "rho": 0.78 },
//!   "out_of_control": { "family": "good", "mean": 2.1, "dispersion": 0.5, "rho": 0.78 },
//!   "change_point": 1,
//!   "replications": 10000,
//!   "cap": 100000,
//!   "seed": 1
//! }
//! ```
//!
//! `limits` takes one of three forms: `{"l": L}` for symmetric limits
//! `center -/+ L`, `{"lcl": .., "ucl": ..}` for explicit thresholds, or
//! `{"target_arl0": ..}` to be resolved by `calibrate`.

use serde::Deserialize;
use steinchart::chart::{ChartDesign, LimitSpec, WeightFunction};
use steinchart::dist::{CountDistribution, FamilyKind};
use steinchart::process::{ProcessModel, ScenarioDgp};
use steinchart::runlength::DesignTemplate;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub chart: ChartConfig,
    pub in_control: ModelConfig,
    #[serde(default)]
    pub out_of_control: Option<ModelConfig>,
    #[serde(default = "default_change_point")]
    pub change_point: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_cap")]
    pub cap: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_change_point() -> u64 {
    1
}
fn default_replications() -> usize {
    10_000
}
fn default_cap() -> u64 {
    100_000
}
fn default_seed() -> u64 {
    1
}
fn default_lambda() -> f64 {
    0.1
}
fn default_dispersion() -> f64 {
    1.0
}
fn default_shift() -> u64 {
    2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    pub kind: ChartKindConfig,
    #[serde(default)]
    pub weight: Option<WeightConfig>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub limits: LimitsConfig,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ChartKindConfig {
    Shewhart,
    Ewma,
    Stein,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum LimitsConfig {
    Symmetric { l: f64 },
    Explicit { lcl: f64, ucl: f64 },
    Target { target_arl0: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub kind: WeightKindConfig,
    #[serde(default = "default_shift")]
    pub shift: u64,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub tail: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKindConfig {
    Linear,
    Root,
    Inverse,
    ShiftedPmf,
    Table,
}

/// A process given by family, mean, dispersion index, bound, and dependence.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: FamilyConfig,
    pub mean: f64,
    #[serde(default = "default_dispersion")]
    pub dispersion: f64,
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default)]
    pub rho: f64,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyConfig {
    Poisson,
    NegBinomial,
    Binomial,
    ZiPoisson,
    ZiBinomial,
    BetaBinomial,
    Good,
}

impl FamilyConfig {
    pub fn kind(self) -> FamilyKind {
        match self {
            FamilyConfig::Poisson => FamilyKind::Poisson,
            FamilyConfig::NegBinomial => FamilyKind::NegBinomial,
            FamilyConfig::Binomial => FamilyKind::Binomial,
            FamilyConfig::ZiPoisson => FamilyKind::ZiPoisson,
            FamilyConfig::ZiBinomial => FamilyKind::ZiBinomial,
            FamilyConfig::BetaBinomial => FamilyKind::BetaBinomial,
            FamilyConfig::Good => FamilyKind::Good,
        }
    }
}

impl ModelConfig {
    pub fn distribution(&self) -> Result<CountDistribution, String> {
        CountDistribution::from_mean_dispersion(
            self.family.kind(),
            self.mean,
            self.dispersion,
            self.n,
        )
        .map_err(|e| e.to_string())
    }

    pub fn process(&self) -> Result<ProcessModel, String> {
        ProcessModel::from_marginal(
            self.family.kind(),
            self.mean,
            self.dispersion,
            self.n,
            self.rho,
        )
        .map_err(|e| e.to_string())
    }
}

impl ChartConfig {
    fn weight_function(&self, in_control: &CountDistribution) -> Result<WeightFunction, String> {
        let w = self
            .weight
            .as_ref()
            .ok_or_else(|| "stein charts need a \"weight\" entry".to_string())?;
        Ok(match w.kind {
            WeightKindConfig::Linear => WeightFunction::Linear,
            WeightKindConfig::Root => WeightFunction::Root,
            WeightKindConfig::Inverse => WeightFunction::Inverse,
            WeightKindConfig::ShiftedPmf => WeightFunction::ShiftedPmf {
                base: in_control.clone(),
                shift: w.shift,
            },
            WeightKindConfig::Table => WeightFunction::Table {
                values: w
                    .values
                    .clone()
                    .ok_or_else(|| "table weights need \"values\"".to_string())?,
                tail: w.tail,
            },
        })
    }

    /// Concrete design; requires `limits` to be symmetric or explicit.
    pub fn design(&self, in_control: &CountDistribution) -> Result<ChartDesign, String> {
        let spec = match self.limits {
            LimitsConfig::Symmetric { l } => LimitSpec::Symmetric(l),
            LimitsConfig::Explicit { lcl, ucl } => LimitSpec::Explicit { lcl, ucl },
            LimitsConfig::Target { target_arl0 } => {
                return Err(format!(
                    "limits give a calibration target ({target_arl0}); run `calibrate` \
                     first or supply {{\"l\": ..}} / {{\"lcl\", \"ucl\"}}"
                ))
            }
        };
        self.build(in_control, spec)
    }

    fn build(
        &self,
        in_control: &CountDistribution,
        spec: LimitSpec,
    ) -> Result<ChartDesign, String> {
        match self.kind {
            ChartKindConfig::Shewhart => {
                ChartDesign::shewhart(in_control.clone(), spec).map_err(|e| e.to_string())
            }
            ChartKindConfig::Ewma => {
                ChartDesign::ewma(in_control.clone(), self.lambda, spec).map_err(|e| e.to_string())
            }
            ChartKindConfig::Stein => {
                let weight = self.weight_function(in_control)?;
                ChartDesign::stein(in_control.clone(), weight, self.lambda, spec)
                    .map_err(|e| e.to_string())
            }
        }
    }

    /// Calibration template plus the target ARL0 from `limits`.
    pub fn template(
        &self,
        in_control: &CountDistribution,
    ) -> Result<(DesignTemplate, f64), String> {
        let target = match self.limits {
            LimitsConfig::Target { target_arl0 } => target_arl0,
            _ => return Err("calibrate needs limits of the form {\"target_arl0\": ..}".to_string()),
        };
        let template = match self.kind {
            ChartKindConfig::Shewhart => DesignTemplate::Shewhart {
                in_control: in_control.clone(),
            },
            ChartKindConfig::Ewma => DesignTemplate::Ewma {
                in_control: in_control.clone(),
                lambda: self.lambda,
            },
            ChartKindConfig::Stein => DesignTemplate::Stein {
                in_control: in_control.clone(),
                weight: self.weight_function(in_control)?,
                lambda: self.lambda,
            },
        };
        Ok((template, target))
    }
}

impl JobConfig {
    pub fn scenario(&self) -> Result<ScenarioDgp, String> {
        let in_control = self.in_control.process()?;
        match &self.out_of_control {
            None => Ok(ScenarioDgp::in_control(in_control)),
            Some(ooc) => ScenarioDgp::with_change(in_control, ooc.process()?, self.change_point)
                .map_err(|e| e.to_string()),
        }
    }
}

pub fn load_job(path: &std::path::Path) -> Result<JobConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn load_model(path: &std::path::Path) -> Result<ModelConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}
