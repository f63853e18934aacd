//! Random circle endomorphisms with additive noise.
//!
//! The crate is organised around six engines:
//!
//! * [`circle`]: maps of the circle, their singular sets, noise streams and
//!   regularity checks.
//! * [`rds`]: orbit generation with running log-derivative and
//!   critical-recurrence sums, stationary histograms and tail estimates.
//! * [`pliss`]: Pliss selection, hyperbolic times and their frequency bounds.
//! * [`certifier`]: numerical certificates for the `(σ, R)` predominance
//!   conditions.
//! * [`horseshoe`]: monotone branch tracking, full-branch times, horseshoe
//!   return sequences and shadowing.
//! * [`cli`]: the `circle-rds` command line driver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certifier;
pub mod circle;
pub mod cli;
pub mod error;
pub mod horseshoe;
pub mod pliss;
pub mod rds;
pub mod stats;

pub use error::{Error, Result};
