use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::HOURS;

/// z-scores of the reported coverage table.
pub const COVERAGE_Z_SCORES: [f64; 4] = [1.0, 1.28, 1.645, 1.96];

/// Quantile levels 0.01, 0.02, ..., 0.99.
pub fn percentile_levels() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Nominal two-sided coverage of a `±z` interval.
pub fn level_for_z(z: f64) -> f64 {
    2.0 * std_normal().cdf(z) - 1.0
}

/// z-score of a central interval with the given coverage.
pub fn z_for_level(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Argument(format!("coverage level must lie in (0, 1), got {level}")));
    }
    Ok(std_normal().inverse_cdf(0.5 + level / 2.0))
}

/// Day-ahead central interval around a point forecast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub point: [f64; HOURS],
    pub lower: [f64; HOURS],
    pub upper: [f64; HOURS],
    pub z: f64,
    /// Nominal coverage fraction.
    pub level: f64,
}

impl PredictionInterval {
    /// Multiplies every bound by `factor` (e.g. to return to raw load units).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            point: self.point.map(|v| v * factor),
            lower: self.lower.map(|v| v * factor),
            upper: self.upper.map(|v| v * factor),
            ..*self
        }
    }
}

/// `point ± z·sqrt(model_var + sigma2)` per hour.
pub fn predictive_interval(
    point: &[f64; HOURS],
    model_var: &[f64; HOURS],
    sigma2: &[f64; HOURS],
    z: f64,
) -> Result<PredictionInterval> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Argument(format!("z must be positive, got {z}")));
    }
    if let Some(v) = model_var.iter().chain(sigma2).find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("variance must be non-negative, got {v}")));
    }
    let half: [f64; HOURS] = std::array::from_fn(|k| z * (model_var[k] + sigma2[k]).sqrt());
    Ok(PredictionInterval {
        point: *point,
        lower: std::array::from_fn(|k| point[k] - half[k]),
        upper: std::array::from_fn(|k| point[k] + half[k]),
        z,
        level: level_for_z(z),
    })
}

/// Fraction of hours whose actual lies inside its interval (bounds inclusive).
pub fn empirical_coverage(intervals: &[PredictionInterval], actuals: &[[f64; HOURS]]) -> Result<f64> {
    if intervals.len() != actuals.len() {
        return Err(Error::shape("coverage days", intervals.len(), actuals.len()));
    }
    if intervals.is_empty() {
        return Err(Error::Data("coverage of an empty test set".into()));
    }
    let inside: usize = intervals
        .iter()
        .zip(actuals)
        .map(|(iv, y)| (0..HOURS).filter(|&k| iv.lower[k] <= y[k] && y[k] <= iv.upper[k]).count())
        .sum();
    Ok(inside as f64 / (intervals.len() * HOURS) as f64)
}

/// Quantiles of N(mean, std²) at the given levels.
pub fn gaussian_quantiles(mean: f64, std: f64, levels: &[f64]) -> Result<Vec<f64>> {
    if !(std >= 0.0) {
        return Err(Error::Domain(format!("standard deviation must be non-negative, got {std}")));
    }
    let unit = std_normal();
    Ok(levels.iter().map(|&tau| mean + std * unit.inverse_cdf(tau)).collect())
}

/// Pinball loss of a single quantile forecast.
pub fn pinball(quantile: f64, actual: f64, tau: f64) -> f64 {
    if actual >= quantile {
        tau * (actual - quantile)
    } else {
        (1.0 - tau) * (quantile - actual)
    }
}

/// Mean pinball loss over observations and quantile levels.
/// `quantiles[i][j]` is the level-`levels[j]` forecast of observation `i`.
pub fn pinball_loss(quantiles: &[Vec<f64>], levels: &[f64], actuals: &[f64]) -> Result<f64> {
    if quantiles.len() != actuals.len() {
        return Err(Error::shape("pinball observations", actuals.len(), quantiles.len()));
    }
    if quantiles.is_empty() || levels.is_empty() {
        return Err(Error::Data("pinball loss of an empty set".into()));
    }
    let mut sum = 0.0;
    for (q, &y) in quantiles.iter().zip(actuals) {
        if q.len() != levels.len() {
            return Err(Error::shape("quantile levels", levels.len(), q.len()));
        }
        sum += q.iter().zip(levels).map(|(&qj, &tau)| pinball(qj, y, tau)).sum::<f64>();
    }
    Ok(sum / (quantiles.len() * levels.len()) as f64)
}

/// Width plus `2/alpha` times the distance by which the actual falls outside
/// the interval, with `alpha = 1 - level`.
pub fn winkler_score(lower: f64, upper: f64, actual: f64, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Argument(format!("coverage level must lie in (0, 1), got {level}")));
    }
    let alpha = 1.0 - level;
    let width = upper - lower;
    let penalty = if actual < lower {
        lower - actual
    } else if actual > upper {
        actual - upper
    } else {
        0.0
    };
    Ok(width + 2.0 / alpha * penalty)
}

/// Winkler score averaged over all hours of all intervals.
pub fn mean_winkler(intervals: &[PredictionInterval], actuals: &[[f64; HOURS]], level: f64) -> Result<f64> {
    if intervals.len() != actuals.len() {
        return Err(Error::shape("winkler days", intervals.len(), actuals.len()));
    }
    if intervals.is_empty() {
        return Err(Error::Data("winkler score of an empty set".into()));
    }
    let mut sum = 0.0;
    for (iv, y) in intervals.iter().zip(actuals) {
        for k in 0..HOURS {
            sum += winkler_score(iv.lower[k], iv.upper[k], y[k], level)?;
        }
    }
    Ok(sum / (intervals.len() * HOURS) as f64)
}
