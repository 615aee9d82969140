//! Hourly load / temperature data: ingestion, normalization, calendar codes
//! and lagged feature construction.

mod calendar;
mod dataset;
mod features;
mod synthetic;

pub use calendar::{calendar_code, is_holiday, season_of, CalendarCode, Season};
pub use dataset::{DayRange, GapRepair, Normalization, TimeSeriesDataset, MAX_REPAIRABLE_GAP};
pub use features::{
    build_day_input, build_day_inputs, build_hour_input, DayInput, FeatureConfig, HourInput,
    DAY_LAGS, HOUR_WINDOW, WEEK_LAGS,
};
pub(crate) use dataset::hex;
pub use synthetic::{synthetic_dataset, synthetic_dataset_with, SyntheticParams};
