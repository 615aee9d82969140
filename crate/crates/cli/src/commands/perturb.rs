use std::path::Path;

use stlf_core::train::evaluate_mape;

use crate::error::Result;
use crate::report::{write_json, PerturbCase, PerturbReport};

use super::Experiment;

/// Noise seed of one (case, trial) pair.
pub fn perturb_seed(seed: u64, case: usize, trial: usize) -> u64 {
    (seed << 32) ^ ((case as u64) << 16) ^ trial as u64
}

fn mean_and_sample_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Test MAPE increase when Gaussian noise is added to every temperature,
/// repeated for each `std_f` case and trial. Writes `perturb.json`.
pub fn perturb_eval(exp: &mut Experiment, bundle_dir: Option<&Path>) -> Result<PerturbReport> {
    let bundle = exp.load_bundle(bundle_dir)?;
    let features = exp.config.model.features;
    let range = exp.splits.test;
    let baseline = evaluate_mape(&bundle, &exp.dataset, &features, range)?.overall;
    let mut cases = Vec::with_capacity(exp.config.perturb.std_f.len());
    for (c, &std_f) in exp.config.perturb.std_f.iter().enumerate() {
        let mut increases = Vec::with_capacity(exp.config.perturb.trials);
        for t in 0..exp.config.perturb.trials {
            let noisy = exp
                .dataset
                .perturb_temperature(std_f, perturb_seed(exp.config.seed, c, t))?;
            increases.push(evaluate_mape(&bundle, &noisy, &features, range)?.overall - baseline);
        }
        let (mean, std) = mean_and_sample_std(&increases);
        log::info!("temperature noise {std_f} F: MAPE increase {mean:.4} +/- {std:.4}");
        cases.push(PerturbCase {
            std_f,
            increases,
            mean,
            std,
        });
    }
    let report = PerturbReport {
        range,
        baseline_mape: baseline,
        cases,
    };
    write_json(exp.output("perturb.json")?, &report)?;
    Ok(report)
}
