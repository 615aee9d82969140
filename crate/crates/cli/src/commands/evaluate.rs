use std::path::Path;

use stlf_core::data::DayRange;
use stlf_core::train::{evaluate_mape, forecast_range, mape_report, Persistence};
use stlf_core::HOURS;

use crate::error::Result;
use crate::report::{write_csv, write_json, ForecastRow, MetricsReport};

use super::{hour_timestamp, Experiment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    fn range(self, exp: &Experiment) -> Result<DayRange> {
        Ok(match self {
            Split::Train => exp.splits.train,
            Split::Validation => exp.validation()?,
            Split::Test => exp.splits.test,
        })
    }
}

/// Point-forecast evaluation: writes `metrics-<split>.json` and
/// `forecasts-<split>.csv` (raw units, 24 rows per day).
pub fn evaluate(exp: &mut Experiment, split: Split, bundle_dir: Option<&Path>) -> Result<MetricsReport> {
    let bundle = exp.load_bundle(bundle_dir)?;
    let range = split.range(exp)?;
    let features = exp.config.model.features;
    let forecasts = forecast_range(&bundle, &exp.dataset, &features, range)?;
    let report = MetricsReport {
        split: split.name().into(),
        range,
        members: bundle.members.len(),
        mape: mape_report(&forecasts)?,
        persistence_mape: evaluate_mape(&Persistence, &exp.dataset, &features, range)?.overall,
    };
    let rows: Vec<ForecastRow> = forecasts
        .iter()
        .flat_map(|f| {
            (0..HOURS).map(move |k| ForecastRow {
                timestamp: hour_timestamp(f.date, k),
                forecast: f.forecast[k],
                actual: f.actual[k],
            })
        })
        .collect();
    write_csv(exp.output(&format!("forecasts-{}.csv", split.name()))?, &rows)?;
    write_json(exp.output(&format!("metrics-{}.json", split.name()))?, &report)?;
    Ok(report)
}
