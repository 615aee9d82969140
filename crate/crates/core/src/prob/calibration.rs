use serde::{Deserialize, Serialize};

use crate::arch::Model;
use crate::data::DayInput;
use crate::error::{Error, Result};
use crate::train::{ensemble_predict, EnsembleBundle};
use crate::HOURS;

use super::mc::{day_seed, mc_dropout_samples, model_variance};
use super::metrics::{empirical_coverage, predictive_interval, PredictionInterval};

/// z-scores whose coverage is matched to 90% and 95% during calibration.
const CALIBRATION_TARGETS: [(f64, f64); 2] = [(1.645, 0.90), (1.96, 0.95)];

/// 0.50, 0.51, ..., 1.50.
pub fn default_beta_grid() -> Vec<f64> {
    (50..=150).map(|i| i as f64 / 100.0).collect()
}

fn actual(day: &DayInput) -> Result<[f64; HOURS]> {
    day.target
        .ok_or_else(|| Error::Data(format!("day {} has no target loads", day.date)))
}

/// Per-hour mean squared ensemble residual over the validation days
/// (noise variance before the `beta` factor).
pub fn mean_squared_residuals(ensemble: &EnsembleBundle, validation: &[DayInput]) -> Result<[f64; HOURS]> {
    if validation.is_empty() {
        return Err(Error::Data("noise estimation needs validation days".into()));
    }
    let mut sum = [0.0; HOURS];
    for day in validation {
        let y = actual(day)?;
        let f = ensemble_predict(ensemble, day)?;
        for k in 0..HOURS {
            sum[k] += (y[k] - f[k]).powi(2);
        }
    }
    let n = validation.len() as f64;
    Ok(sum.map(|s| s / n))
}

/// `sigma2_h = beta / V * sum_v (y_vh - f_vh)^2` with the ensemble as `f`.
pub fn estimate_sigma2(ensemble: &EnsembleBundle, validation: &[DayInput], beta: f64) -> Result<[f64; HOURS]> {
    if !(beta > 0.0) {
        return Err(Error::Argument(format!("beta must be positive, got {beta}")));
    }
    Ok(mean_squared_residuals(ensemble, validation)?.map(|v| beta * v))
}

/// Grid search on precomputed validation quantities. Returns the grid value
/// minimizing `|cov_1.645 - 0.90| + |cov_1.96 - 0.95|`; ties go to the
/// smaller value.
pub fn calibrate_beta_from_parts(
    points: &[[f64; HOURS]],
    model_vars: &[[f64; HOURS]],
    actuals: &[[f64; HOURS]],
    base_sigma2: &[f64; HOURS],
    grid: &[f64],
) -> Result<f64> {
    if grid.is_empty() || grid.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::Argument("beta grid must be non-empty and positive".into()));
    }
    if points.len() != model_vars.len() {
        return Err(Error::shape("calibration days", points.len(), model_vars.len()));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = (f64::INFINITY, sorted[0]);
    for &beta in &sorted {
        let sigma2 = base_sigma2.map(|v| beta * v);
        let mut gap = 0.0;
        for (z, target) in CALIBRATION_TARGETS {
            let intervals = points
                .iter()
                .zip(model_vars)
                .map(|(p, mv)| predictive_interval(p, mv, &sigma2, z))
                .collect::<Result<Vec<_>>>()?;
            gap += (empirical_coverage(&intervals, actuals)? - target).abs();
        }
        if gap < best.0 {
            best = (gap, beta);
        }
    }
    Ok(best.1)
}

/// Everything needed to turn an ensemble point forecast into intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyModel {
    pub dropout_p: f64,
    pub mc_samples: usize,
    pub beta: f64,
    /// Noise variance per hour, normalized units, `beta` already applied.
    pub sigma2_per_hour: [f64; HOURS],
    /// Single dropout-trained model whose MC variance stands in for the
    /// model-uncertainty term.
    pub variance_model: Model,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub dropout_p: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            dropout_p: 0.1,
            mc_samples: 100,
            seed: 0,
        }
    }
}

/// MC-dropout variance of `model` on `day`.
pub fn day_model_variance(model: &Model, day: &DayInput, mc: &McSettings) -> Result<[f64; HOURS]> {
    let samples = mc_dropout_samples(model, day, mc.mc_samples, mc.dropout_p, day_seed(mc.seed, day.date))?;
    model_variance(&samples)
}

/// Calibrates `beta` on validation and stores the resulting noise variance.
pub fn calibrate_beta(
    ensemble: &EnsembleBundle,
    variance_model: &Model,
    validation: &[DayInput],
    grid: &[f64],
    mc: &McSettings,
) -> Result<UncertaintyModel> {
    let base = mean_squared_residuals(ensemble, validation)?;
    let points = validation
        .iter()
        .map(|d| ensemble_predict(ensemble, d))
        .collect::<Result<Vec<_>>>()?;
    let vars = validation
        .iter()
        .map(|d| day_model_variance(variance_model, d, mc))
        .collect::<Result<Vec<_>>>()?;
    let actuals = validation.iter().map(actual).collect::<Result<Vec<_>>>()?;
    let beta = calibrate_beta_from_parts(&points, &vars, &actuals, &base, grid)?;
    Ok(UncertaintyModel {
        dropout_p: mc.dropout_p,
        mc_samples: mc.mc_samples,
        beta,
        sigma2_per_hour: base.map(|v| beta * v),
        variance_model: variance_model.clone(),
        seed: mc.seed,
    })
}

impl UncertaintyModel {
    fn settings(&self) -> McSettings {
        McSettings {
            dropout_p: self.dropout_p,
            mc_samples: self.mc_samples,
            seed: self.seed,
        }
    }

    /// Ensemble point forecast and total predictive variance (normalized).
    pub fn predictive(&self, ensemble: &EnsembleBundle, day: &DayInput) -> Result<([f64; HOURS], [f64; HOURS])> {
        let point = ensemble_predict(ensemble, day)?;
        let mv = day_model_variance(&self.variance_model, day, &self.settings())?;
        Ok((point, std::array::from_fn(|k| mv[k] + self.sigma2_per_hour[k])))
    }

    pub fn interval(&self, ensemble: &EnsembleBundle, day: &DayInput, z: f64) -> Result<PredictionInterval> {
        let point = ensemble_predict(ensemble, day)?;
        let mv = day_model_variance(&self.variance_model, day, &self.settings())?;
        predictive_interval(&point, &mv, &self.sigma2_per_hour, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_grid() {
        let p = vec![[0.0; HOURS]];
        let b = calibrate_beta_from_parts(&p, &[[0.0; HOURS]], &[[0.1; HOURS]], &[0.01; HOURS], &[0.7]).unwrap();
        assert_eq!(b, 0.7);
    }

    #[test]
    fn grid_is_inclusive() {
        let g = default_beta_grid();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.5);
        assert_eq!(g[100], 1.5);
        assert!((g[29] - 0.79).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_smaller_beta() {
        // Every actual equals its point forecast, so every beta covers all.
        let p = vec![[1.0; HOURS]; 3];
        let v = vec![[0.0; HOURS]; 3];
        let b = calibrate_beta_from_parts(&p, &v, &p, &[0.01; HOURS], &[1.2, 0.9, 1.0]).unwrap();
        assert_eq!(b, 0.9);
    }

    #[test]
    fn recovers_known_gaussian_noise() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let days = 400;
        let points = vec![[1.0; HOURS]; days];
        let actuals: Vec<[f64; HOURS]> = (0..days)
            .map(|_| std::array::from_fn(|_| 1.0 + noise.sample(&mut rng)))
            .collect();
        let mut base = [0.0; HOURS];
        for a in &actuals {
            for k in 0..HOURS {
                base[k] += (a[k] - 1.0).powi(2) / days as f64;
            }
        }
        let vars = vec![[0.0; HOURS]; days];
        let b = calibrate_beta_from_parts(&points, &vars, &actuals, &base, &default_beta_grid()).unwrap();
        assert!((b - 1.0).abs() <= 0.1, "beta {b}");
    }
}
