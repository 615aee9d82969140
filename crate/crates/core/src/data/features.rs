//! Per-hour lagged input bundles.
//!
//! For target hour `h` of day `D` (instant `D 00:00 + (h-1)` hours):
//!
//! | field     | size | offsets before the target instant          |
//! |-----------|------|--------------------------------------------|
//! | `l_month` | 6    | 4, 8, 12, 16, 20, 24 weeks                 |
//! | `l_week`  | 4    | 1, 2, 3, 4 weeks                           |
//! | `l_day`   | 7    | 1 .. 7 days                                |
//! | `l_hour`  | 24   | 24 .. 1 hours (oldest first)               |
//! | `t_*`     |      | temperatures at the same instants          |
//! | `t_h`     | 1    | temperature at the target instant          |
//!
//! plus the calendar one-hots of `D`. The number of monthly lags can be
//! reduced through [`FeatureConfig::month_lags`].

use chrono::{Duration, NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};

use super::calendar::{calendar_code, CalendarCode};
use super::dataset::{DayRange, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::HOURS;

pub const WEEK_LAGS: usize = 4;
pub const DAY_LAGS: usize = 7;
pub const HOUR_WINDOW: usize = 24;

const HOURS_PER_WEEK: i64 = 168;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Number of 4-week-spaced lags (6 covers 24 weeks).
    pub month_lags: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { month_lags: 6 }
    }
}

impl FeatureConfig {
    /// Deepest lag in weeks.
    pub fn history_weeks(&self) -> i64 {
        (4 * self.month_lags as i64).max(WEEK_LAGS as i64)
    }

    pub fn month_offsets(&self) -> impl Iterator<Item = i64> {
        (1..=self.month_lags as i64).map(|k| 4 * k * HOURS_PER_WEEK)
    }

    pub fn week_offsets(&self) -> impl Iterator<Item = i64> {
        (1..=WEEK_LAGS as i64).map(|k| k * HOURS_PER_WEEK)
    }

    pub fn day_offsets(&self) -> impl Iterator<Item = i64> {
        (1..=DAY_LAGS as i64).map(|k| k * 24)
    }

    /// Width of the flattened [`HourInput`].
    pub fn input_width(&self) -> usize {
        2 * (self.month_lags + WEEK_LAGS + DAY_LAGS) + HOUR_WINDOW + 1 + 8
    }

    /// Earliest day for which every hour of the day has full history.
    pub fn earliest_target_day(&self, dataset: &TimeSeriesDataset) -> NaiveDate {
        let need = self.history_weeks() * HOURS_PER_WEEK;
        let first_full = dataset.start() + Duration::hours(need);
        if first_full.time() == NaiveTime::MIN {
            first_full.date()
        } else {
            first_full.date().succ_opt().expect("date overflow")
        }
    }

    /// Days in `range` that have full history and lie inside the dataset.
    pub fn forecastable_days(&self, dataset: &TimeSeriesDataset, range: DayRange) -> Result<DayRange> {
        let full = dataset
            .full_days()
            .ok_or_else(|| Error::Data("dataset holds no complete day".into()))?;
        let earliest = self.earliest_target_day(dataset).max(full.start);
        if range.start < earliest {
            return Err(Error::History {
                target: range.start,
                earliest,
            });
        }
        if range.end > full.end || range.is_empty() {
            return Err(Error::Range(format!(
                "range {} .. {} extends past the last complete day {}",
                range.start, range.end, full.end
            )));
        }
        Ok(range)
    }
}

/// The feature bundle for one target hour. Load and temperature values are
/// normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct HourInput {
    pub l_month: Vec<f64>,
    pub l_week: [f64; WEEK_LAGS],
    pub l_day: [f64; DAY_LAGS],
    pub l_hour: [f64; HOUR_WINDOW],
    pub t_month: Vec<f64>,
    pub t_week: [f64; WEEK_LAGS],
    pub t_day: [f64; DAY_LAGS],
    pub t_h: f64,
    pub calendar: CalendarCode,
    /// 1-based hour of the day.
    pub hour_index: usize,
}

impl HourInput {
    /// Trailing entries of `l_hour` that fall inside the target day. They are
    /// unknown at forecast time and replaced by the model's own forecasts.
    pub fn autoregressive_slots(&self) -> usize {
        self.hour_index - 1
    }

    /// All features in table order: l_month, l_week, l_day, l_hour, t_month,
    /// t_week, t_day, t_h, season, weekday, holiday.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(67);
        v.extend_from_slice(&self.l_month);
        v.extend_from_slice(&self.l_week);
        v.extend_from_slice(&self.l_day);
        v.extend_from_slice(&self.l_hour);
        v.extend_from_slice(&self.t_month);
        v.extend_from_slice(&self.t_week);
        v.extend_from_slice(&self.t_day);
        v.push(self.t_h);
        v.extend_from_slice(&self.calendar.season_one_hot());
        v.extend_from_slice(&self.calendar.weekday_one_hot());
        v.extend_from_slice(&self.calendar.holiday_one_hot());
        v
    }
}

/// The 24 hourly bundles of one target day plus, when known, the actual
/// normalized loads.
#[derive(Debug, Clone, PartialEq)]
pub struct DayInput {
    pub date: NaiveDate,
    pub hours: Vec<HourInput>,
    pub target: Option<[f64; HOURS]>,
}

impl DayInput {
    pub fn month_lags(&self) -> usize {
        self.hours.first().map_or(0, |h| h.l_month.len())
    }

    pub fn without_target(mut self) -> Self {
        self.target = None;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hours.len() != HOURS {
            return Err(Error::shape("day input hours", HOURS, self.hours.len()));
        }
        let lags = self.month_lags();
        for (k, h) in self.hours.iter().enumerate() {
            if h.hour_index != k + 1 {
                return Err(Error::Contract(format!(
                    "hour bundle {k} carries hour index {}",
                    h.hour_index
                )));
            }
            if h.l_month.len() != lags || h.t_month.len() != lags {
                return Err(Error::shape("monthly lags", lags, h.l_month.len().max(h.t_month.len())));
            }
        }
        Ok(())
    }
}

pub fn build_hour_input(
    dataset: &TimeSeriesDataset,
    cfg: &FeatureConfig,
    target_day: NaiveDate,
    hour: usize,
) -> Result<HourInput> {
    if !(1..=HOURS).contains(&hour) {
        return Err(Error::Argument(format!("hour index {hour} outside 1..=24")));
    }
    let norm = dataset.require_normalization()?;
    let instant = target_day.and_time(NaiveTime::MIN) + Duration::hours(hour as i64 - 1);
    let target = dataset.offset_of(instant);
    let deepest = cfg.history_weeks() * HOURS_PER_WEEK;
    if target - deepest < 0 {
        return Err(Error::History {
            target: target_day,
            earliest: cfg.earliest_target_day(dataset),
        });
    }
    if target >= dataset.len() as i64 {
        return Err(Error::Range(format!("{instant} is past the end of the dataset")));
    }
    let target = target as usize;
    let load = dataset.load();
    let temp = dataset.temperature();
    let lag = |offset: i64| target - offset as usize;

    let l_month = cfg.month_offsets().map(|o| norm.load(load[lag(o)])).collect();
    let t_month = cfg.month_offsets().map(|o| norm.temp(temp[lag(o)])).collect();
    let mut l_week = [0.0; WEEK_LAGS];
    let mut t_week = [0.0; WEEK_LAGS];
    for (k, o) in cfg.week_offsets().enumerate() {
        l_week[k] = norm.load(load[lag(o)]);
        t_week[k] = norm.temp(temp[lag(o)]);
    }
    let mut l_day = [0.0; DAY_LAGS];
    let mut t_day = [0.0; DAY_LAGS];
    for (k, o) in cfg.day_offsets().enumerate() {
        l_day[k] = norm.load(load[lag(o)]);
        t_day[k] = norm.temp(temp[lag(o)]);
    }
    let mut l_hour = [0.0; HOUR_WINDOW];
    for (k, slot) in l_hour.iter_mut().enumerate() {
        *slot = norm.load(load[target - HOUR_WINDOW + k]);
    }

    Ok(HourInput {
        l_month,
        l_week,
        l_day,
        l_hour,
        t_month,
        t_week,
        t_day,
        t_h: norm.temp(temp[target]),
        calendar: calendar_code(target_day),
        hour_index: hour,
    })
}

/// Builds all 24 hourly bundles of `target_day` together with its actual
/// normalized loads.
pub fn build_day_input(
    dataset: &TimeSeriesDataset,
    cfg: &FeatureConfig,
    target_day: NaiveDate,
) -> Result<DayInput> {
    let hours = (1..=HOURS)
        .map(|h| build_hour_input(dataset, cfg, target_day, h))
        .collect::<Result<Vec<_>>>()?;
    let first = dataset
        .index_of(target_day.and_time(NaiveTime::MIN))
        .ok_or_else(|| Error::Range(format!("{target_day} is not inside the dataset")))?;
    let norm = dataset.require_normalization()?;
    let mut target = [0.0; HOURS];
    for (k, t) in target.iter_mut().enumerate() {
        *t = norm.load(dataset.load()[first + k]);
    }
    Ok(DayInput {
        date: target_day,
        hours,
        target: Some(target),
    })
}

pub fn build_day_inputs(
    dataset: &TimeSeriesDataset,
    cfg: &FeatureConfig,
    range: DayRange,
) -> Result<Vec<DayInput>> {
    let range = cfg.forecastable_days(dataset, range)?;
    range.days().map(|d| build_day_input(dataset, cfg, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::Normalization;
    use chrono::{Datelike, NaiveDateTime, Weekday};
    use proptest::prelude::*;

    /// Load encodes the hour offset so every feature identifies its instant.
    fn indexed_dataset(days: usize) -> TimeSeriesDataset {
        let start = NaiveDate::from_ymd_opt(2001, 1, 1).unwrap().and_time(NaiveTime::MIN);
        let n = days * 24;
        let load = (0..n).map(|i| i as f64 + 1.0).collect();
        let temp = (0..n).map(|i| -(i as f64) - 1.0).collect();
        let mut ds = TimeSeriesDataset::from_parts(start, load, temp).unwrap();
        ds.set_normalization(Normalization {
            max_load: 1.0,
            max_temp: 1.0,
        });
        ds
    }

    fn instant_of(ds: &TimeSeriesDataset, load_value: f64) -> NaiveDateTime {
        ds.timestamp(load_value as usize - 1)
    }

    #[test]
    fn table_sizes() {
        let ds = indexed_dataset(200);
        let cfg = FeatureConfig::default();
        let day = cfg.earliest_target_day(&ds);
        let h = build_hour_input(&ds, &cfg, day, 5).unwrap();
        assert_eq!(h.l_month.len(), 6);
        assert_eq!(h.t_month.len(), 6);
        assert_eq!(h.flatten().len(), 67);
        assert_eq!(cfg.input_width(), 67);
    }

    #[test]
    fn earliest_day_is_24_weeks_after_start() {
        let ds = indexed_dataset(400);
        let cfg = FeatureConfig::default();
        let earliest = cfg.earliest_target_day(&ds);
        // Day 169 counting the first day as day 1.
        assert_eq!((earliest - ds.start().date()).num_days() + 1, 169);
        assert!(build_hour_input(&ds, &cfg, earliest, 1).is_ok());
        match build_hour_input(&ds, &cfg, earliest.pred_opt().unwrap(), 24) {
            Err(Error::History { earliest: e, .. }) => assert_eq!(e, earliest),
            other => panic!("expected history error, got {other:?}"),
        }
    }

    #[test]
    fn first_hour_window_is_previous_day() {
        let ds = indexed_dataset(200);
        let cfg = FeatureConfig::default();
        let day = cfg.earliest_target_day(&ds) + Duration::days(3);
        let h = build_hour_input(&ds, &cfg, day, 1).unwrap();
        let prev = day.pred_opt().unwrap();
        for (k, v) in h.l_hour.iter().enumerate() {
            let ts = instant_of(&ds, *v);
            assert_eq!(ts.date(), prev);
            assert_eq!(ts.time(), NaiveTime::from_hms_opt(k as u32, 0, 0).unwrap());
        }
        assert_eq!(h.autoregressive_slots(), 0);
    }

    #[test]
    fn second_hour_window_ends_inside_target_day() {
        let ds = indexed_dataset(200);
        let cfg = FeatureConfig::default();
        let day = cfg.earliest_target_day(&ds) + Duration::days(3);
        let h = build_hour_input(&ds, &cfg, day, 2).unwrap();
        let first = instant_of(&ds, h.l_hour[0]);
        let last = instant_of(&ds, h.l_hour[23]);
        assert_eq!(first, day.pred_opt().unwrap().and_hms_opt(1, 0, 0).unwrap());
        assert_eq!(last, day.and_time(NaiveTime::MIN));
        assert_eq!(h.autoregressive_slots(), 1);
    }

    #[test]
    fn weekly_lags_share_day_of_week() {
        let ds = indexed_dataset(200);
        let cfg = FeatureConfig::default();
        let mut day = cfg.earliest_target_day(&ds);
        while day.weekday() != Weekday::Mon {
            day = day.succ_opt().unwrap();
        }
        let h = build_hour_input(&ds, &cfg, day, 9).unwrap();
        for (k, v) in h.l_week.iter().enumerate() {
            let ts = instant_of(&ds, *v);
            assert_eq!(ts.weekday(), Weekday::Mon);
            assert_eq!((day - ts.date()).num_days(), 7 * (k as i64 + 1));
        }
    }

    #[test]
    fn reduced_month_lags() {
        let ds = indexed_dataset(200);
        let cfg = FeatureConfig { month_lags: 3 };
        assert_eq!(cfg.history_weeks(), 12);
        let day = cfg.earliest_target_day(&ds);
        assert_eq!((day - ds.start().date()).num_days(), 84);
        let h = build_hour_input(&ds, &cfg, day, 1).unwrap();
        assert_eq!(h.l_month.len(), 3);
        assert_eq!(h.flatten().len(), 61);
    }

    #[test]
    fn day_input_is_ordered() {
        let ds = indexed_dataset(200);
        let cfg = FeatureConfig::default();
        let day = cfg.earliest_target_day(&ds);
        let d = build_day_input(&ds, &cfg, day).unwrap();
        d.validate().unwrap();
        for (k, h) in d.hours.iter().enumerate() {
            assert_eq!(h.hour_index, k + 1);
        }
        let t = d.target.unwrap();
        assert_eq!(instant_of(&ds, t[0]), day.and_time(NaiveTime::MIN));
    }

    proptest! {
        #[test]
        fn lag_offsets_match_timestamp_arithmetic(extra_days in 0i64..30, hour in 1usize..=24) {
            let ds = indexed_dataset(200);
            let cfg = FeatureConfig::default();
            let day = cfg.earliest_target_day(&ds) + Duration::days(extra_days);
            let h = build_hour_input(&ds, &cfg, day, hour).unwrap();
            let target = day.and_time(NaiveTime::MIN) + Duration::hours(hour as i64 - 1);
            let check = |vals: &[f64], offsets: Vec<i64>, temp: bool| {
                for (v, o) in vals.iter().zip(offsets) {
                    let raw = if temp { -v } else { *v };
                    assert_eq!(instant_of(&ds, raw), target - Duration::hours(o));
                }
            };
            check(&h.l_month, cfg.month_offsets().collect(), false);
            check(&h.t_month, cfg.month_offsets().collect(), true);
            check(&h.l_week, cfg.week_offsets().collect(), false);
            check(&h.t_week, cfg.week_offsets().collect(), true);
            check(&h.l_day, cfg.day_offsets().collect(), false);
            check(&h.t_day, cfg.day_offsets().collect(), true);
            check(&h.l_hour, (1..=24).rev().collect(), false);
            prop_assert_eq!(instant_of(&ds, -h.t_h), target);
        }
    }
}
