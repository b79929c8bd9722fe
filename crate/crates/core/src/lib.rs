//! Control charts for count processes.
//!
//! This crate covers the full monitoring workflow for serially independent
//! or AR(1)-autocorrelated counts with Poisson, negative-binomial, or
//! binomial in-control marginals:
//!
//! * [`dist`] - parametric count distributions (PMF, moments, sampling,
//!   mean/dispersion-index parameterization),
//! * [`process`] - thinning operators and stationary AR(1)-type count
//!   process simulators with change-point support,
//! * [`chart`] - Shewhart c/np charts, ordinary EWMA charts, and Stein
//!   EWMA charts built from the Poisson/NB/binomial Stein identities,
//! * [`runlength`] - zero-state run-length simulation, ARL estimation,
//!   control-limit calibration, and exact Markov-chain ARLs for Shewhart
//!   charts,
//! * [`mod@bench`] - a declarative scenario harness that emits ARL tables for
//!   whole chart/alternative/mean-shift grids.
//!
//! All Monte-Carlo entry points are deterministic given a seed: every
//! replication draws from its own counter-indexed stream (see [`rng`]), so
//! results are bit-identical across runs and across worker counts.

pub mod bench;
pub mod chart;
pub mod dist;
pub mod error;
pub mod process;
pub mod rng;
pub mod runlength;
pub mod stats;

pub use error::{Error, Result};
