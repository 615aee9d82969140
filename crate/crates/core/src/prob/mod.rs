//! Probabilistic forecasts: MC-dropout model variance, per-hour noise
//! variance calibrated on validation data, Gaussian predictive intervals and
//! quantiles, and their scores.

mod calibration;
mod mc;
mod metrics;

pub use calibration::{
    calibrate_beta, calibrate_beta_from_parts, day_model_variance, default_beta_grid, estimate_sigma2,
    mean_squared_residuals, McSettings, UncertaintyModel,
};
pub use mc::{day_seed, mc_dropout_samples, model_variance};
pub use metrics::{
    empirical_coverage, gaussian_quantiles, level_for_z, mean_winkler, percentile_levels, pinball, pinball_loss,
    predictive_interval, winkler_score, z_for_level, PredictionInterval, COVERAGE_Z_SCORES,
};
