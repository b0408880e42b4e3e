//! Site-explicit, continuous-time epidemic simulation with exact sampling of
//! exposures, testing and contact tracing, and calibration of transmission
//! rates by Bayesian optimization.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod calib;
pub mod cli;
pub mod config;
pub mod error;
pub mod intervals;
pub mod interventions;
pub mod rng;
pub mod simcore;
pub mod synthpop;
pub mod testtrace;

pub use error::{Error, Result};
