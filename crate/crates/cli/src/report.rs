//! Report files written by the commands, with matching readers.

use std::fs;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use stlf_core::data::{DayRange, GapRepair, Normalization};
use stlf_core::train::{EpochLog, MapeReport};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareReport {
    pub rows: usize,
    pub first_timestamp: NaiveDateTime,
    pub last_timestamp: NaiveDateTime,
    pub repaired_gaps: Vec<GapRepair>,
    pub merged_duplicates: usize,
    pub normalization: Normalization,
    pub earliest_forecastable_day: NaiveDate,
    pub train: DayRange,
    pub validation: Option<DayRange>,
    pub test: DayRange,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub split: String,
    pub range: DayRange,
    pub members: usize,
    pub mape: MapeReport,
    /// Same-hour-last-week baseline on the same days.
    pub persistence_mape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbCase {
    pub std_f: f64,
    /// Perturbed minus baseline MAPE (percentage points), one per trial.
    pub increases: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single trial.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbReport {
    pub range: DayRange,
    pub baseline_mape: f64,
    pub cases: Vec<PerturbCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub z: f64,
    pub expected: f64,
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinklerRow {
    pub level: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbReport {
    pub range: DayRange,
    pub beta: f64,
    /// Noise variance per hour in raw load units squared.
    pub sigma2_per_hour: Vec<f64>,
    pub coverage: Vec<CoverageRow>,
    /// Averaged over percentiles 1..99 and all test hours, raw units.
    pub pinball: f64,
    pub winkler: Vec<WinklerRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub timestamp: NaiveDateTime,
    pub forecast: f64,
    pub actual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub timestamp: NaiveDateTime,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub epoch: usize,
    pub train_total: f64,
    pub train_error: f64,
    pub train_range: f64,
    pub validation_total: Option<f64>,
    pub validation_error: Option<f64>,
    pub validation_range: Option<f64>,
    pub wall_ms: u64,
}

impl From<&EpochLog> for LossRow {
    fn from(e: &EpochLog) -> Self {
        Self {
            epoch: e.epoch,
            train_total: e.train.total,
            train_error: e.train.error_term,
            train_range: e.train.range_term,
            validation_total: e.validation.map(|v| v.total),
            validation_error: e.validation.map(|v| v.error_term),
            validation_range: e.validation.map(|v| v.range_term),
            wall_ms: e.wall_ms,
        }
    }
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value).map_err(CliError::json(path))?;
    fs::write(path, text + "\n").map_err(CliError::io(path))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    serde_json::from_slice(&bytes).map_err(CliError::json(path))
}

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    for r in rows {
        w.serialize(r).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_csv<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(CliError::csv(path))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(CliError::csv(path))
}
