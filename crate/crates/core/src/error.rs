//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A distribution parameter is outside its domain.
    #[error("invalid {family} parameter: {reason}")]
    InvalidParameter {
        family: &'static str,
        reason: String,
    },

    /// A (mean, dispersion) pair cannot be represented by the family.
    #[error("infeasible (mean, dispersion) pair for {family}: {reason}")]
    Infeasible {
        family: &'static str,
        reason: String,
    },

    /// A tabulated weight function was queried past its last entry.
    #[error("weight table has no entry for x = {x} and no tail value")]
    WeightDomain { x: u64 },

    /// A weight function violates the requirements of the Stein statistics.
    #[error("invalid weight function: {0}")]
    InvalidWeight(String),

    /// A chart design could not be constructed.
    #[error("invalid chart design: {0}")]
    InvalidDesign(String),

    /// An observed count lies outside the chart's bounded support.
    #[error("count {x} exceeds the chart's bounded support (n = {n})")]
    CountOutOfRange { x: u64, n: u64 },

    /// Two process models cannot be combined into one scenario.
    #[error("incompatible process models: {0}")]
    ModelMismatch(String),

    /// An operation received an empty input it cannot act on.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Control-limit calibration could not reach its target.
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// A numerical procedure failed to converge or produced a singular system.
    #[error("numerical failure: {0}")]
    Numerical(String),
}
