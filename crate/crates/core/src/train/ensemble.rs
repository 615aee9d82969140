use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arch::Model;
use crate::data::{build_day_inputs, DayInput, DayRange, FeatureConfig, Normalization, TimeSeriesDataset};
use crate::data::hex;
use crate::error::{Error, Result};
use crate::HOURS;

use super::trainer::TrainConfig;

/// One snapshot of one initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub init_id: usize,
    pub epoch: usize,
    pub model: Model,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMetadata {
    /// SHA-256 of the training configuration.
    pub config_hash: String,
    /// See [`TimeSeriesDataset::fingerprint`].
    pub dataset_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleBundle {
    pub members: Vec<Member>,
    pub metadata: BundleMetadata,
    /// Scaling used for the training inputs; needed to denormalize forecasts.
    pub normalization: Option<Normalization>,
}

/// Stable hash of a training configuration.
pub fn config_hash(cfg: &TrainConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("config serializes");
    hex(&Sha256::digest(&json))
}

impl EnsembleBundle {
    pub fn new(members: Vec<Member>, cfg: &TrainConfig) -> Result<Self> {
        let bundle = Self {
            members,
            metadata: BundleMetadata {
                config_hash: config_hash(cfg),
                dataset_fingerprint: String::new(),
            },
            normalization: None,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    /// Wraps a single model.
    pub fn single(model: Model) -> Self {
        Self {
            members: vec![Member {
                init_id: 0,
                epoch: 0,
                model,
            }],
            metadata: BundleMetadata::default(),
            normalization: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .members
            .first()
            .ok_or_else(|| Error::Contract("an ensemble needs at least one member".into()))?;
        for m in &self.members[1..] {
            if m.model.config != first.model.config {
                return Err(Error::ArchitectureMismatch(format!(
                    "member (init {}, epoch {}) differs from the first member",
                    m.init_id, m.epoch
                )));
            }
        }
        Ok(())
    }

    pub fn features(&self) -> FeatureConfig {
        self.members[0].model.config.features
    }

    pub fn predict(&self, day: &DayInput) -> Result<[f64; HOURS]> {
        ensemble_predict(self, day)
    }
}

/// Unweighted mean of the member forecasts.
pub fn ensemble_predict(bundle: &EnsembleBundle, day: &DayInput) -> Result<[f64; HOURS]> {
    if bundle.members.is_empty() {
        return Err(Error::Contract("an ensemble needs at least one member".into()));
    }
    let mut sum = [0.0; HOURS];
    for m in &bundle.members {
        let y = m.model.forward(day)?;
        for (s, v) in sum.iter_mut().zip(y) {
            *s += v;
        }
    }
    let n = bundle.members.len() as f64;
    Ok(sum.map(|s| s / n))
}

/// Anything producing a normalized day-ahead forecast from a [`DayInput`].
pub trait Forecaster: Sync {
    fn forecast(&self, day: &DayInput) -> Result<[f64; HOURS]>;
}

impl Forecaster for Model {
    fn forecast(&self, day: &DayInput) -> Result<[f64; HOURS]> {
        self.forward(day)
    }
}

impl Forecaster for EnsembleBundle {
    fn forecast(&self, day: &DayInput) -> Result<[f64; HOURS]> {
        ensemble_predict(self, day)
    }
}

/// Same hour one week earlier.
#[derive(Debug, Clone, Copy, Default)]
pub struct Persistence;

impl Forecaster for Persistence {
    fn forecast(&self, day: &DayInput) -> Result<[f64; HOURS]> {
        day.validate()?;
        Ok(std::array::from_fn(|k| day.hours[k].l_week[0]))
    }
}

/// Raw-unit forecast and actual loads of one day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayForecast {
    pub date: NaiveDate,
    pub forecast: [f64; HOURS],
    pub actual: [f64; HOURS],
}

/// Forecasts every day of `range` and denormalizes the results.
pub fn forecast_range(
    forecaster: &dyn Forecaster,
    dataset: &TimeSeriesDataset,
    features: &FeatureConfig,
    range: DayRange,
) -> Result<Vec<DayForecast>> {
    let norm = dataset
        .normalization()
        .ok_or_else(|| Error::Data("dataset has no normalization constants".into()))?;
    let days = build_day_inputs(dataset, features, range)?;
    days.iter()
        .map(|d| {
            let y = forecaster.forecast(d)?;
            let first = dataset
                .index_of(d.date.and_time(NaiveTime::MIN))
                .ok_or_else(|| Error::Range(format!("{} is outside the dataset", d.date)))?;
            let actual: [f64; HOURS] = std::array::from_fn(|k| dataset.load()[first + k]);
            Ok(DayForecast {
                date: d.date,
                forecast: y.map(|v| norm.denormalize_load(v)),
                actual,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyMape {
    pub year: i32,
    pub month: u32,
    pub mape: f64,
    pub hours: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapeReport {
    /// Percent.
    pub overall: f64,
    pub monthly: Vec<MonthlyMape>,
    pub days: usize,
}

/// Mean absolute percentage error overall and per calendar month.
pub fn mape_report(forecasts: &[DayForecast]) -> Result<MapeReport> {
    if forecasts.is_empty() {
        return Err(Error::Data("no forecasts to score".into()));
    }
    let mut months: BTreeMap<(i32, u32), (f64, usize)> = BTreeMap::new();
    let mut total = 0.0;
    for f in forecasts {
        let entry = months.entry((f.date.year(), f.date.month())).or_default();
        for k in 0..HOURS {
            if !(f.actual[k] > 0.0) {
                return Err(Error::Domain(format!("actual load on {} is not positive", f.date)));
            }
            let e = (f.forecast[k] - f.actual[k]).abs() / f.actual[k];
            entry.0 += e;
            entry.1 += 1;
            total += e;
        }
    }
    let n = (forecasts.len() * HOURS) as f64;
    Ok(MapeReport {
        overall: 100.0 * total / n,
        monthly: months
            .into_iter()
            .map(|((year, month), (sum, hours))| MonthlyMape {
                year,
                month,
                mape: 100.0 * sum / hours as f64,
                hours,
            })
            .collect(),
        days: forecasts.len(),
    })
}

pub fn evaluate_mape(
    forecaster: &dyn Forecaster,
    dataset: &TimeSeriesDataset,
    features: &FeatureConfig,
    range: DayRange,
) -> Result<MapeReport> {
    mape_report(&forecast_range(forecaster, dataset, features, range)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::ArchitectureConfig;
    use crate::data::synthetic_dataset;
    use crate::nn::job_rng;
    use chrono::Duration;

    fn setup() -> (TimeSeriesDataset, FeatureConfig, DayRange) {
        let mut ds = synthetic_dataset(230, 4).unwrap();
        let f = FeatureConfig { month_lags: 2 };
        let first = f.earliest_target_day(&ds);
        ds.fit_normalization(DayRange::new(ds.start().date(), first)).unwrap();
        (ds, f, DayRange::new(first, first + Duration::days(9)))
    }

    fn model(seed: u64) -> Model {
        let cfg = ArchitectureConfig {
            features: FeatureConfig { month_lags: 2 },
            ..Default::default()
        };
        Model::initialized(cfg, &mut job_rng(seed, 0)).unwrap()
    }

    #[test]
    fn identical_members_equal_single() {
        let (ds, f, range) = setup();
        let m = model(1);
        let day = &build_day_inputs(&ds, &f, range).unwrap()[0];
        let mut bundle = EnsembleBundle::single(m.clone());
        bundle.members.push(bundle.members[0].clone());
        assert_eq!(bundle.predict(day).unwrap(), m.forward(day).unwrap());
    }

    #[test]
    fn two_members_average() {
        let (ds, f, range) = setup();
        let (a, b) = (model(1), model(2));
        let day = &build_day_inputs(&ds, &f, range).unwrap()[0];
        let mut bundle = EnsembleBundle::single(a.clone());
        bundle.members.push(Member { init_id: 1, epoch: 0, model: b.clone() });
        let (ya, yb) = (a.forward(day).unwrap(), b.forward(day).unwrap());
        let y = bundle.predict(day).unwrap();
        for k in 0..HOURS {
            assert!((y[k] - (ya[k] + yb[k]) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn persistence_reads_last_week() {
        let (ds, f, range) = setup();
        let fc = forecast_range(&Persistence, &ds, &f, range).unwrap();
        let first = ds.index_of(range.start.and_time(NaiveTime::MIN)).unwrap();
        for k in 0..HOURS {
            assert!((fc[0].forecast[k] - ds.load()[first + k - 168]).abs() < 1e-9);
        }
    }

    #[test]
    fn perfect_forecasts_score_zero() {
        let fc = vec![DayForecast {
            date: NaiveDate::from_ymd_opt(2000, 3, 1).unwrap(),
            forecast: [5.0; HOURS],
            actual: [5.0; HOURS],
        }];
        let r = mape_report(&fc).unwrap();
        assert_eq!(r.overall, 0.0);
        assert_eq!(r.monthly.len(), 1);
    }

    #[test]
    fn monthly_breakdown() {
        let d1 = NaiveDate::from_ymd_opt(2000, 1, 31).unwrap();
        let fc = vec![
            DayForecast { date: d1, forecast: [110.0; HOURS], actual: [100.0; HOURS] },
            DayForecast { date: d1 + Duration::days(1), forecast: [100.0; HOURS], actual: [100.0; HOURS] },
        ];
        let r = mape_report(&fc).unwrap();
        assert!((r.overall - 5.0).abs() < 1e-12);
        assert!((r.monthly[0].mape - 10.0).abs() < 1e-12);
        assert_eq!(r.monthly[1].mape, 0.0);
    }

    #[test]
    fn mismatched_members_rejected() {
        let mut bundle = EnsembleBundle::single(model(1));
        let other = Model::initialized(ArchitectureConfig::default(), &mut job_rng(1, 0)).unwrap();
        bundle.members.push(Member { init_id: 1, epoch: 0, model: other });
        assert!(matches!(bundle.validate(), Err(Error::ArchitectureMismatch(_))));
    }
}
