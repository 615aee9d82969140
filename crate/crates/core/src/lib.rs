//! Day-ahead short-term load forecasting with deep residual networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`data`]: hourly load/temperature ingestion, normalization, calendar codes
//!   and the per-hour lagged feature bundles.
//! - [`nn`]: a small dense-network core (activations, dropout, reverse-mode
//!   gradients, Adam, finite-difference gradient checks), all in `f64`.
//! - [`arch`]: the per-hour basic structure with autoregressive chaining of
//!   the 24 hourly forecasts, and the ResNet / ResNetPlus residual stages.
//! - [`train`]: the error + out-of-range loss, the snapshot / re-initialization
//!   ensemble trainer, MAPE evaluation and checkpoint persistence.
//! - [`prob`]: MC-dropout predictive variance, per-hour noise estimation,
//!   interval construction and probabilistic scores.

// NaN must fail range checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod arch;
pub mod data;
pub mod error;
pub mod nn;
pub mod prob;
pub mod train;

pub use error::{Error, Result};

/// Number of hourly values in a forecast day.
pub const HOURS: usize = 24;
