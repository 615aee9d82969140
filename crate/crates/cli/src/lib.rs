//! Batch driver for the load forecasting toolkit: TOML experiment configs,
//! the `prepare`/`train`/`evaluate`/`perturb-eval`/`prob-eval` commands and
//! the JSON/CSV reports they write.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use error::{CliError, Result};
