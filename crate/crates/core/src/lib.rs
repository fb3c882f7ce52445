//! Signal extraction from binned subjective probability distributions.
//!
//! The crate is `no_std` (with `alloc`) and carries every numerical piece of
//! the pipeline:
//!
//! - [`spd`]: binned distributions, open-tail closure, piecewise-uniform
//!   quantiles and CDF.
//! - [`moments`]: mean, median, mode, variance, coefficient of variation,
//!   Bowley / Pearson-mode / Kelly skewness, Moors kurtosis and the
//!   cross-moment correlation matrix.
//! - [`signal`]: strong/weak signal classification, forecaster fixed-effect
//!   demeaning, cross-sectional aggregation and the signal strength index.
//! - [`gar`]: growth-at-risk evaluation: check-loss quantile regression,
//!   skewed-t fitting to predicted quantiles, log score and CRPS.
//!
//! File formats, configuration and the command line live in the `ssi-cli`
//! companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
mod math;
mod quarter;

pub mod gar;
pub mod moments;
pub mod signal;
pub mod spd;
pub mod stats;

pub use error::{Error, Result};
pub use quarter::Quarter;
