//! The batch commands. Each takes a loaded [`Experiment`], writes its
//! outputs under the experiment's output directory and returns its report.

mod evaluate;
mod perturb;
mod prepare;
mod prob;
mod train;

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{NaiveDateTime, NaiveTime};
use stlf_core::data::{build_day_inputs, DayInput, DayRange, TimeSeriesDataset};
use stlf_core::train::{load_bundle, EnsembleBundle};

use crate::config::{resolve_splits, ExperimentConfig, ResolvedSplits};
use crate::error::{CliError, Result};

pub use evaluate::{evaluate, Split};
pub use perturb::{perturb_eval, perturb_seed};
pub use prepare::prepare;
pub use prob::{prob_eval, INTERVAL_LEVELS};
pub use train::{train, TrainOutcome};

/// Command-line overrides of config values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Worker threads for ensemble training; 0 uses every core.
    pub jobs: usize,
}

/// A validated config with its dataset, splits and normalization in place.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub dataset: TimeSeriesDataset,
    pub splits: ResolvedSplits,
    pub out_dir: PathBuf,
    pub jobs: usize,
}

impl Experiment {
    pub fn load(config_path: impl AsRef<Path>, overrides: &Overrides) -> Result<Self> {
        Self::new(ExperimentConfig::load(config_path)?, overrides)
    }

    pub fn new(mut config: ExperimentConfig, overrides: &Overrides) -> Result<Self> {
        if let Some(out) = &overrides.out {
            config.output_dir = out.clone();
        }
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        config.validate()?;
        let mut dataset = config.read_dataset()?;
        let splits = resolve_splits(&config, &dataset)?;
        dataset.fit_normalization(config.split.train)?;
        let jobs = if overrides.jobs == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            overrides.jobs
        };
        Ok(Self {
            out_dir: config.output_dir.clone(),
            config,
            dataset,
            splits,
            jobs,
        })
    }

    pub fn bundle_dir(&self) -> PathBuf {
        self.out_dir.join("bundle")
    }

    pub fn variance_model_path(&self) -> PathBuf {
        self.out_dir.join("variance-model.ckpt")
    }

    pub fn output(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir).map_err(CliError::io(&self.out_dir))?;
        Ok(self.out_dir.join(name))
    }

    fn days(&self, range: DayRange) -> Result<Vec<DayInput>> {
        Ok(build_day_inputs(&self.dataset, &self.config.model.features, range)?)
    }

    fn validation(&self) -> Result<DayRange> {
        self.splits
            .validation
            .ok_or_else(|| CliError::Config("this command needs a validation range in [split]".into()))
    }

    /// Loads a bundle, checks it matches the configured architecture and
    /// adopts its normalization so inputs are scaled as in training.
    fn load_bundle(&mut self, dir: Option<&Path>) -> Result<EnsembleBundle> {
        let dir = dir.map_or_else(|| self.bundle_dir(), Path::to_path_buf);
        let bundle = load_bundle(&dir)?;
        let arch = bundle.members[0].model.config;
        if arch != self.config.model {
            return Err(stlf_core::Error::ArchitectureMismatch(format!(
                "bundle {} holds {arch:?}, configuration asks for {:?}",
                dir.display(),
                self.config.model
            ))
            .into());
        }
        if let Some(n) = bundle.normalization {
            if Some(n) != self.dataset.normalization() {
                log::warn!("using the bundle's normalization constants {n:?}");
            }
            self.dataset.set_normalization(n);
        }
        if !bundle.metadata.dataset_fingerprint.is_empty()
            && bundle.metadata.dataset_fingerprint != self.dataset.fingerprint()
        {
            log::warn!("bundle was trained on a different dataset");
        }
        Ok(bundle)
    }
}

fn hour_timestamp(day: chrono::NaiveDate, hour: usize) -> NaiveDateTime {
    day.and_time(NaiveTime::MIN) + chrono::Duration::hours(hour as i64)
}
