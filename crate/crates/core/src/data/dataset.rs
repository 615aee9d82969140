use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Longest run of missing hours that `load_csv` repairs by interpolation.
pub const MAX_REPAIRABLE_GAP: i64 = 3;

const TIMESTAMP_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

/// Inclusive range of calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DayRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        Self { start, end }
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        date >= self.start && date <= self.end
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take_while(move |d| *d <= self.end)
    }

    pub fn num_days(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (self.end - self.start).num_days() as usize + 1
        }
    }
}

/// Scale constants: the maxima of raw load and temperature over the
/// training period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub max_load: f64,
    pub max_temp: f64,
}

impl Normalization {
    pub fn load(&self, raw: f64) -> f64 {
        raw / self.max_load
    }

    pub fn temp(&self, raw: f64) -> f64 {
        raw / self.max_temp
    }

    pub fn denormalize_load(&self, normalized: f64) -> f64 {
        normalized * self.max_load
    }
}

/// A run of missing hours that was filled by linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapRepair {
    /// Last timestamp present before the gap.
    pub after: NaiveDateTime,
    pub missing_hours: usize,
}

/// Contiguous hourly series of load and temperature.
///
/// Timestamps are implicit: sample `i` is at `start + i` hours.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    start: NaiveDateTime,
    load: Vec<f64>,
    temperature: Vec<f64>,
    normalization: Option<Normalization>,
    repairs: Vec<GapRepair>,
    merged_duplicates: usize,
}

impl TimeSeriesDataset {
    pub fn from_parts(start: NaiveDateTime, load: Vec<f64>, temperature: Vec<f64>) -> Result<Self> {
        if load.len() != temperature.len() {
            return Err(Error::shape("dataset columns", load.len(), temperature.len()));
        }
        if load.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        if start.minute() != 0 || start.second() != 0 {
            return Err(Error::Data(format!("start {start} is not on an hour boundary")));
        }
        if let Some(i) = load.iter().chain(&temperature).position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at position {i}")));
        }
        Ok(Self {
            start,
            load,
            temperature,
            normalization: None,
            repairs: Vec::new(),
            merged_duplicates: 0,
        })
    }

    /// Reads `timestamp,load,temperature` rows.
    ///
    /// A first line starting with a non-digit is treated as a header. Gaps of
    /// up to [`MAX_REPAIRABLE_GAP`] hours are filled by linear interpolation;
    /// repeated timestamps (DST fall-back) are averaged.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;

        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };

        let mut start: Option<NaiveDateTime> = None;
        let mut last: Option<NaiveDateTime> = None;
        let mut load: Vec<f64> = Vec::new();
        let mut temperature: Vec<f64> = Vec::new();
        let mut repairs = Vec::new();
        let mut merged_duplicates = 0usize;
        // Number of rows averaged into the final sample (DST duplicates).
        let mut last_weight = 1.0;

        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(row + 1);
            let first = record.get(0).unwrap_or("");
            if row == 0 && !first.starts_with(|c: char| c.is_ascii_digit()) {
                continue;
            }
            if record.iter().all(str::is_empty) {
                continue;
            }
            if record.len() != 3 {
                return Err(parse_err(line, format!("expected 3 fields, found {}", record.len())));
            }
            let ts = parse_timestamp(first)
                .ok_or_else(|| parse_err(line, format!("invalid timestamp {first:?}")))?;
            if ts.minute() != 0 || ts.second() != 0 {
                return Err(parse_err(line, format!("timestamp {ts} is not on an hour boundary")));
            }
            let value = |i: usize, what: &str| -> Result<f64> {
                let raw = record.get(i).unwrap_or("");
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, format!("invalid {what} {raw:?}")))
            };
            let l = value(1, "load")?;
            let t = value(2, "temperature")?;

            match last {
                None => {
                    start = Some(ts);
                    load.push(l);
                    temperature.push(t);
                }
                Some(prev) if ts == prev => {
                    let n = load.len() - 1;
                    load[n] = (load[n] * last_weight + l) / (last_weight + 1.0);
                    temperature[n] = (temperature[n] * last_weight + t) / (last_weight + 1.0);
                    last_weight += 1.0;
                    merged_duplicates += 1;
                    continue;
                }
                Some(prev) if ts < prev => {
                    return Err(Error::Ordering {
                        path: path.to_path_buf(),
                        line,
                        timestamp: ts,
                    });
                }
                Some(prev) => {
                    let step = (ts - prev).num_hours();
                    let missing = step - 1;
                    if missing > MAX_REPAIRABLE_GAP {
                        return Err(Error::DataGap {
                            path: path.to_path_buf(),
                            line,
                            after: prev,
                            hours: missing,
                            limit: MAX_REPAIRABLE_GAP,
                        });
                    }
                    if missing > 0 {
                        let (l0, t0) = (*load.last().unwrap(), *temperature.last().unwrap());
                        for k in 1..=missing {
                            let frac = k as f64 / step as f64;
                            load.push(l0 + (l - l0) * frac);
                            temperature.push(t0 + (t - t0) * frac);
                        }
                        repairs.push(GapRepair {
                            after: prev,
                            missing_hours: missing as usize,
                        });
                    }
                    load.push(l);
                    temperature.push(t);
                }
            }
            last = Some(ts);
            last_weight = 1.0;
        }

        let start = start.ok_or_else(|| Error::Data(format!("{}: no data rows", path.display())))?;
        let mut ds = Self::from_parts(start, load, temperature)?;
        ds.repairs = repairs;
        ds.merged_duplicates = merged_duplicates;
        Ok(ds)
    }

    /// Writes the raw series as `timestamp,load,temperature` with a header.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["timestamp", "load", "temperature"])
            .map_err(|e| csv_error(path, e))?;
        for i in 0..self.len() {
            w.write_record([
                self.timestamp(i).format("%Y-%m-%dT%H:%M:%S").to_string(),
                format!("{}", self.load[i]),
                format!("{}", self.temperature[i]),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load.is_empty()
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn end(&self) -> NaiveDateTime {
        self.timestamp(self.len() - 1)
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::hours(index as i64)
    }

    pub fn timestamps(&self) -> impl Iterator<Item = NaiveDateTime> + '_ {
        (0..self.len()).map(|i| self.timestamp(i))
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn temperature(&self) -> &[f64] {
        &self.temperature
    }

    pub fn repairs(&self) -> &[GapRepair] {
        &self.repairs
    }

    pub fn merged_duplicates(&self) -> usize {
        self.merged_duplicates
    }

    pub fn normalization(&self) -> Option<Normalization> {
        self.normalization
    }

    pub fn set_normalization(&mut self, normalization: Normalization) {
        self.normalization = Some(normalization);
    }

    pub(crate) fn require_normalization(&self) -> Result<Normalization> {
        self.normalization
            .ok_or_else(|| Error::Data("dataset has no normalization constants; fit them first".into()))
    }

    /// Index of the instant, if it lies inside the series.
    pub fn index_of(&self, instant: NaiveDateTime) -> Option<usize> {
        let delta = instant - self.start;
        if delta.num_seconds() % 3600 != 0 {
            return None;
        }
        let h = delta.num_hours();
        (h >= 0 && (h as usize) < self.len()).then_some(h as usize)
    }

    /// Signed hour offset of `instant` from the first sample.
    pub(crate) fn offset_of(&self, instant: NaiveDateTime) -> i64 {
        (instant - self.start).num_hours()
    }

    /// First and last calendar days whose 24 hours are all present.
    pub fn full_days(&self) -> Option<DayRange> {
        let first = if self.start.time() == NaiveTime::MIN {
            self.start.date()
        } else {
            self.start.date().succ_opt()?
        };
        let end = self.end();
        let last = if end.hour() == 23 {
            end.date()
        } else {
            end.date().pred_opt()?
        };
        (first <= last).then_some(DayRange::new(first, last))
    }

    fn range_indices(&self, range: DayRange) -> Result<std::ops::Range<usize>> {
        if range.is_empty() {
            return Err(Error::Range(format!("empty day range {} .. {}", range.start, range.end)));
        }
        let first = self.index_of(range.start.and_time(NaiveTime::MIN));
        let last = self.index_of(range.end.and_time(NaiveTime::MIN) + Duration::hours(23));
        match (first, last) {
            (Some(a), Some(b)) => Ok(a..b + 1),
            _ => Err(Error::Range(format!(
                "day range {} .. {} is not inside the dataset ({} .. {})",
                range.start,
                range.end,
                self.start,
                self.end()
            ))),
        }
    }

    /// Fits the normalization constants on `train_range` only and stores them.
    pub fn fit_normalization(&mut self, train_range: DayRange) -> Result<Normalization> {
        let idx = self.range_indices(train_range)?;
        let max_load = self.load[idx.clone()].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let max_temp = self.temperature[idx].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max_load <= 0.0 {
            return Err(Error::Range(format!("maximum training load {max_load} is not positive")));
        }
        if max_temp <= 0.0 {
            return Err(Error::Range(format!(
                "maximum training temperature {max_temp} is not positive"
            )));
        }
        let n = Normalization { max_load, max_temp };
        self.normalization = Some(n);
        Ok(n)
    }

    pub fn normalized_load(&self, index: usize) -> Result<f64> {
        Ok(self.require_normalization()?.load(self.load[index]))
    }

    pub fn normalized_loads(&self) -> Result<Vec<f64>> {
        let n = self.require_normalization()?;
        Ok(self.load.iter().map(|&v| n.load(v)).collect())
    }

    pub fn normalized_temperatures(&self) -> Result<Vec<f64>> {
        let n = self.require_normalization()?;
        Ok(self.temperature.iter().map(|&v| n.temp(v)).collect())
    }

    /// Copy with i.i.d. N(0, std_f²) noise added to every raw temperature.
    /// The load channel and the normalization constants are left untouched.
    pub fn perturb_temperature(&self, std_f: f64, seed: u64) -> Result<Self> {
        if !(std_f >= 0.0) || !std_f.is_finite() {
            return Err(Error::Argument(format!("temperature noise std must be >= 0, got {std_f}")));
        }
        let mut out = self.clone();
        if std_f == 0.0 {
            return Ok(out);
        }
        let normal = Normal::new(0.0, std_f).map_err(|e| Error::Argument(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in &mut out.temperature {
            *t += normal.sample(&mut rng);
        }
        Ok(out)
    }

    /// Replaces the raw load at one instant (used by tests and what-if runs).
    pub fn with_load_at(mut self, index: usize, value: f64) -> Self {
        self.load[index] = value;
        self
    }

    /// SHA-256 over the start instant and both raw channels.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.start.to_string().as_bytes());
        for v in self.load.iter().chain(&self.temperature) {
            h.update(v.to_le_bytes());
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}
