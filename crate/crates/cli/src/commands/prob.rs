use std::path::Path;

use stlf_core::prob::{
    calibrate_beta, default_beta_grid, empirical_coverage, gaussian_quantiles, level_for_z, mean_winkler,
    percentile_levels, pinball_loss, predictive_interval, z_for_level, McSettings, PredictionInterval,
    COVERAGE_Z_SCORES,
};
use stlf_core::train::load_checkpoint_for;
use stlf_core::{Error, HOURS};

use crate::error::{CliError, Result};
use crate::report::{write_csv, write_json, CoverageRow, IntervalRow, ProbReport, WinklerRow};

use super::{hour_timestamp, Experiment};

/// Nominal coverages written to `intervals.csv` and scored by Winkler.
pub const INTERVAL_LEVELS: [f64; 2] = [0.5, 0.9];

/// Calibrates the noise variance on the validation range, then scores
/// Gaussian predictive intervals on the test range. Writes
/// `prob-metrics.json` and `intervals.csv` (raw units).
pub fn prob_eval(
    exp: &mut Experiment,
    bundle_dir: Option<&Path>,
    variance_model: Option<&Path>,
) -> Result<ProbReport> {
    let u = exp
        .config
        .uncertainty
        .clone()
        .ok_or_else(|| CliError::Config("prob-eval needs an [uncertainty] section".into()))?;
    let validation_range = exp.validation()?;
    let bundle = exp.load_bundle(bundle_dir)?;
    let vpath = variance_model.map_or_else(|| exp.variance_model_path(), Path::to_path_buf);
    let (vmodel, _) = load_checkpoint_for(&vpath, &exp.config.model)?;
    let norm = exp
        .dataset
        .normalization()
        .ok_or_else(|| Error::Data("dataset has no normalization constants".into()))?;
    let scale = norm.max_load;

    let mc = McSettings {
        dropout_p: u.dropout_p,
        mc_samples: u.mc_samples,
        seed: exp.config.seed,
    };
    let grid = u.beta_grid.clone().unwrap_or_else(default_beta_grid);
    let validation = exp.days(validation_range)?;
    let model = calibrate_beta(&bundle, &vmodel, &validation, &grid, &mc)?;
    log::info!("calibrated beta = {}", model.beta);

    let range = exp.splits.test;
    let test = exp.days(range)?;
    let mut predictive = Vec::with_capacity(test.len());
    let mut actuals = Vec::with_capacity(test.len());
    for day in &test {
        let (point, total) = model.predictive(&bundle, day)?;
        let target = day
            .target
            .ok_or_else(|| Error::Data(format!("day {} has no target loads", day.date)))?;
        predictive.push((point, total));
        actuals.push(target);
    }
    let intervals_at = |z: f64| -> Result<Vec<PredictionInterval>> {
        Ok(predictive
            .iter()
            .map(|(p, var)| predictive_interval(p, var, &[0.0; HOURS], z))
            .collect::<stlf_core::Result<Vec<_>>>()?)
    };

    let mut coverage = Vec::with_capacity(COVERAGE_Z_SCORES.len());
    for z in COVERAGE_Z_SCORES {
        coverage.push(CoverageRow {
            z,
            expected: level_for_z(z),
            empirical: empirical_coverage(&intervals_at(z)?, &actuals)?,
        });
    }

    let raw_actuals: Vec<[f64; HOURS]> = actuals.iter().map(|a| a.map(|v| v * scale)).collect();
    let levels = percentile_levels();
    let mut quantiles = Vec::with_capacity(test.len() * HOURS);
    for (point, var) in &predictive {
        for k in 0..HOURS {
            quantiles.push(gaussian_quantiles(point[k] * scale, var[k].sqrt() * scale, &levels)?);
        }
    }
    let flat_actuals: Vec<f64> = raw_actuals.iter().flatten().copied().collect();
    let pinball = pinball_loss(&quantiles, &levels, &flat_actuals)?;

    let mut winkler = Vec::with_capacity(INTERVAL_LEVELS.len());
    let mut rows = Vec::with_capacity(INTERVAL_LEVELS.len() * test.len() * HOURS);
    for level in INTERVAL_LEVELS {
        let raw: Vec<PredictionInterval> = intervals_at(z_for_level(level)?)?
            .iter()
            .map(|iv| iv.scaled(scale))
            .collect();
        winkler.push(WinklerRow {
            level,
            score: mean_winkler(&raw, &raw_actuals, level)?,
        });
        for (day, iv) in test.iter().zip(&raw) {
            for k in 0..HOURS {
                rows.push(IntervalRow {
                    timestamp: hour_timestamp(day.date, k),
                    point: iv.point[k],
                    lower: iv.lower[k],
                    upper: iv.upper[k],
                    level,
                });
            }
        }
    }

    let report = ProbReport {
        range,
        beta: model.beta,
        sigma2_per_hour: model.sigma2_per_hour.iter().map(|v| v * scale * scale).collect(),
        coverage,
        pinball,
        winkler,
    };
    write_csv(exp.output("intervals.csv")?, &rows)?;
    write_json(exp.output("prob-metrics.json")?, &report)?;
    Ok(report)
}
