//! Deterministic synthetic hourly load / temperature series for tests and
//! demos that must run without the public datasets.

use std::f64::consts::TAU;

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::calendar::is_holiday;
use super::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    pub start: NaiveDateTime,
    /// Mean load level (MW).
    pub base_load: f64,
    /// Relative amplitude of the daily load shape.
    pub daily_amplitude: f64,
    /// Load multiplier on Saturdays and Sundays.
    pub weekend_factor: f64,
    pub holiday_factor: f64,
    /// MW per °F above `cooling_threshold`.
    pub cooling_slope: f64,
    pub cooling_threshold: f64,
    /// MW per °F below `heating_threshold`.
    pub heating_slope: f64,
    pub heating_threshold: f64,
    /// Standard deviation of the i.i.d. load noise, relative to `base_load`.
    pub load_noise: f64,
    pub mean_temp: f64,
    pub seasonal_temp_amplitude: f64,
    pub daily_temp_amplitude: f64,
    /// Stationary std of the slowly varying weather anomaly (°F).
    pub weather_std: f64,
    /// Hourly AR(1) coefficient of the weather anomaly.
    pub weather_persistence: f64,
    pub temp_noise: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(1990, 1, 1)
                .unwrap()
                .and_time(NaiveTime::MIN),
            base_load: 1000.0,
            daily_amplitude: 0.15,
            weekend_factor: 0.88,
            holiday_factor: 0.9,
            cooling_slope: 9.0,
            cooling_threshold: 65.0,
            heating_slope: 5.0,
            heating_threshold: 50.0,
            load_noise: 0.008,
            mean_temp: 55.0,
            seasonal_temp_amplitude: 22.0,
            daily_temp_amplitude: 7.0,
            weather_std: 6.0,
            weather_persistence: 0.99,
            temp_noise: 0.5,
        }
    }
}

/// `days` days of hourly data from the default generator.
pub fn synthetic_dataset(days: usize, seed: u64) -> Result<TimeSeriesDataset> {
    synthetic_dataset_with(days, seed, &SyntheticParams::default())
}

/// Load is a base level shaped by a daily profile, a weekend / holiday
/// factor and a heating / cooling response to temperature, plus Gaussian
/// noise. Temperature is a seasonal and daily sinusoid plus an AR(1)
/// weather anomaly.
pub fn synthetic_dataset_with(
    days: usize,
    seed: u64,
    params: &SyntheticParams,
) -> Result<TimeSeriesDataset> {
    if days < 200 {
        return Err(Error::Argument(format!(
            "synthetic datasets need at least 200 days, got {days}"
        )));
    }
    let p = params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = days * 24;
    let mut load = Vec::with_capacity(n);
    let mut temperature = Vec::with_capacity(n);
    let innovation = p.weather_std * (1.0 - p.weather_persistence.powi(2)).sqrt();
    let z0: f64 = StandardNormal.sample(&mut rng);
    let mut anomaly = p.weather_std * z0;

    for i in 0..n {
        let ts = p.start + chrono::Duration::hours(i as i64);
        let hour = ts.hour() as f64;
        let doy = ts.ordinal0() as f64;
        let date = ts.date();

        let z: f64 = StandardNormal.sample(&mut rng);
        anomaly = p.weather_persistence * anomaly + innovation * z;
        let seasonal = p.mean_temp + p.seasonal_temp_amplitude * (TAU * (doy - 105.0) / 365.25).sin();
        let daily = p.daily_temp_amplitude * (TAU * (hour - 9.0) / 24.0).sin();
        let noise_t: f64 = StandardNormal.sample(&mut rng);
        let t = seasonal + daily + anomaly + p.temp_noise * noise_t;

        let shape = 1.0
            + p.daily_amplitude
                * (0.8 * (TAU * (hour - 10.0) / 24.0).sin() + 0.35 * (2.0 * TAU * (hour - 7.0) / 24.0).sin());
        let mut day_factor = 1.0;
        if matches!(date.weekday(), chrono::Weekday::Sat | chrono::Weekday::Sun) {
            day_factor *= p.weekend_factor;
        }
        if is_holiday(date) {
            day_factor *= p.holiday_factor;
        }
        let weather = p.cooling_slope * (t - p.cooling_threshold).max(0.0)
            + p.heating_slope * (p.heating_threshold - t).max(0.0);
        let noise_l: f64 = StandardNormal.sample(&mut rng);
        let l = p.base_load * shape * day_factor + weather + p.load_noise * p.base_load * noise_l;

        load.push(l.max(1.0));
        temperature.push(t);
    }
    TimeSeriesDataset::from_parts(p.start, load, temperature)
}
