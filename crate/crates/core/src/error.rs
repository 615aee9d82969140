//! Error type shared by every module of the crate.

use std::path::PathBuf;

use chrono::{NaiveDate, NaiveDateTime};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: timestamp {timestamp} is not after the previous row")]
    Ordering {
        path: PathBuf,
        line: usize,
        timestamp: NaiveDateTime,
    },

    #[error("{path}:{line}: gap of {hours} hours after {after} exceeds the {limit}-hour repair limit")]
    DataGap {
        path: PathBuf,
        line: usize,
        after: NaiveDateTime,
        hours: i64,
        limit: i64,
    },

    #[error("range error: {0}")]
    Range(String),

    #[error("insufficient history for {target}; earliest usable target day is {earliest}")]
    History {
        target: NaiveDate,
        earliest: NaiveDate,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("training diverged (non-finite loss) at epoch {epoch} of member {init_id}")]
    Divergence { init_id: usize, epoch: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),

    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Shape {
            context,
            expected,
            actual,
        }
    }
}
