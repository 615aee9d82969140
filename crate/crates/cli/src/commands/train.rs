use std::fs;

use stlf_core::train::{
    save_bundle, save_checkpoint, train_ensemble, train_single, BundleManifest, CheckpointDescriptor, DataSplits,
    TrainRun,
};

use crate::error::{CliError, Result};
use crate::report::{write_csv, LossRow};

use super::Experiment;

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub manifest: BundleManifest,
    pub runs: Vec<TrainRun>,
    pub variance_run: Option<TrainRun>,
}

fn write_log(exp: &Experiment, name: &str, run: &TrainRun) -> Result<()> {
    let dir = exp.out_dir.join("logs");
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let rows: Vec<LossRow> = run.log.iter().map(LossRow::from).collect();
    write_csv(dir.join(name), &rows)
}

/// Trains the ensemble (and the variance model when `[uncertainty]` is
/// set), writing the bundle directory, the variance checkpoint and one
/// loss-log CSV per trained model.
pub fn train(exp: &Experiment) -> Result<TrainOutcome> {
    let data = DataSplits {
        train: exp.days(exp.splits.train)?,
        validation: match exp.splits.validation {
            Some(v) => exp.days(v)?,
            None => Vec::new(),
        },
    };
    let cfg = exp.config.train_config();
    log::info!(
        "training {} initializations on {} days with {} worker(s)",
        cfg.num_inits,
        data.train.len(),
        exp.jobs
    );
    let (mut bundle, runs) = train_ensemble(&data, &cfg, exp.jobs)?;
    bundle.normalization = exp.dataset.normalization();
    bundle.metadata.dataset_fingerprint = exp.dataset.fingerprint();
    let manifest = save_bundle(exp.bundle_dir(), &bundle)?;
    for run in &runs {
        write_log(exp, &format!("init-{:02}.csv", run.init_id), run)?;
    }

    let variance_run = match exp.config.variance_train_config() {
        Some((vcfg, stream)) => {
            log::info!("training the variance model for {} epochs", vcfg.epochs);
            let run = train_single(&data, &vcfg, stream)?;
            let member = run.snapshots.last().expect("one snapshot");
            let desc = CheckpointDescriptor {
                architecture: member.model.config,
                normalization: bundle.normalization,
                init_id: member.init_id,
                epoch: member.epoch,
                metadata: bundle.metadata.clone(),
            };
            let path = exp.output("variance-model.ckpt")?;
            save_checkpoint(&path, &member.model, &desc)?;
            write_log(exp, "variance.csv", &run)?;
            Some(run)
        }
        None => None,
    };
    Ok(TrainOutcome {
        manifest,
        runs,
        variance_run,
    })
}
