//! Experiment configuration: one TOML document per experiment.
//!
//! ```toml
//! seed = 0
//! output_dir = "runs/demo"
//!
//! [data.synthetic]          # or: [data] path = "data/load.csv"
//! days = 600
//! seed = 1
//!
//! [split]
//! train = { start = "1990-06-18", end = "1991-05-31" }
//! validation = { start = "1991-06-01", end = "1991-06-30" }
//! test = { start = "1991-07-01", end = "1991-08-22" }
//!
//! [model]                   # architecture; see ArchitectureConfig
//! stage = { type = "resnetplus", num_layers = 10 }
//!
//! [train]
//! epochs = 150
//! snapshot_epochs = [150]
//! ```
//!
//! Relative paths are taken relative to the working directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stlf_core::arch::ArchitectureConfig;
use stlf_core::data::{synthetic_dataset, DayRange, TimeSeriesDataset};
use stlf_core::nn::AdamConfig;
use stlf_core::train::TrainConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataSource,
    pub split: SplitConfig,
    #[serde(default)]
    pub model: ArchitectureConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub uncertainty: Option<UncertaintyConfig>,
    #[serde(default)]
    pub perturb: PerturbConfig,
}

/// Exactly one of `path` or `synthetic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticSource>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub days: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train: DayRange,
    /// Needed for probabilistic evaluation; otherwise only logged.
    pub validation: Option<DayRange>,
    pub test: DayRange,
}

/// Training options other than the seed and the architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub snapshot_epochs: Vec<usize>,
    pub num_inits: usize,
    pub dropout: f64,
    pub adam: AdamConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            epochs: d.epochs,
            batch_size: d.batch_size,
            snapshot_epochs: d.snapshot_epochs,
            num_inits: d.num_inits,
            dropout: d.dropout,
            adam: d.adam,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UncertaintyConfig {
    pub dropout_p: f64,
    pub mc_samples: usize,
    /// Training epochs of the single dropout model used for MC variance.
    pub variance_epochs: usize,
    /// Candidate noise scale factors; defaults to 0.50, 0.51, ..., 1.50.
    pub beta_grid: Option<Vec<f64>>,
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        Self {
            dropout_p: 0.1,
            mc_samples: 100,
            variance_epochs: 500,
            beta_grid: None,
        }
    }
}

/// Temperature-noise robustness runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbConfig {
    /// Standard deviations of the added temperature noise (°F), one case each.
    pub std_f: Vec<f64>,
    pub trials: usize,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            std_f: vec![1.0, 2.0, 3.0],
            trials: 5,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        let cfg = Self::from_toml(&text).map_err(|source| CliError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that does not need the dataset.
    pub fn validate(&self) -> Result<()> {
        match (&self.data.path, &self.data.synthetic) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => {
                return Err(CliError::Config(
                    "[data] needs exactly one of `path` or `synthetic`".into(),
                ))
            }
        }
        self.model.validate()?;
        self.train_config().validate()?;
        let s = &self.split;
        let mut named = vec![("train", s.train)];
        named.extend(s.validation.map(|v| ("validation", v)));
        named.push(("test", s.test));
        for (name, r) in &named {
            if r.is_empty() {
                return Err(CliError::Config(format!("{name} range ends before it starts")));
            }
        }
        for pair in named.windows(2) {
            let ((a, ra), (b, rb)) = (pair[0], pair[1]);
            if ra.end >= rb.start {
                return Err(CliError::Config(format!(
                    "{a} range must end before the {b} range starts ({} >= {})",
                    ra.end, rb.start
                )));
            }
        }
        if let Some(u) = &self.uncertainty {
            if !(0.0..1.0).contains(&u.dropout_p) || u.mc_samples < 2 || u.variance_epochs == 0 {
                return Err(CliError::Config(
                    "[uncertainty] needs dropout_p in [0, 1), mc_samples >= 2 and variance_epochs >= 1".into(),
                ));
            }
        }
        if self.perturb.trials == 0 || self.perturb.std_f.iter().any(|s| !(*s >= 0.0)) {
            return Err(CliError::Config(
                "[perturb] needs trials >= 1 and non-negative std_f values".into(),
            ));
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            snapshot_epochs: t.snapshot_epochs.clone(),
            num_inits: t.num_inits,
            seed: self.seed,
            dropout: t.dropout,
            adam: t.adam,
            architecture: self.model,
        }
    }

    /// The single dropout-trained model whose MC variance feeds the
    /// intervals. It uses its own RNG stream, after the ensemble's.
    pub fn variance_train_config(&self) -> Option<(TrainConfig, usize)> {
        let u = self.uncertainty.as_ref()?;
        let cfg = TrainConfig {
            epochs: u.variance_epochs,
            snapshot_epochs: vec![u.variance_epochs],
            num_inits: 1,
            dropout: u.dropout_p,
            ..self.train_config()
        };
        Some((cfg, self.train.num_inits))
    }

    pub fn read_dataset(&self) -> Result<TimeSeriesDataset> {
        Ok(match (&self.data.path, &self.data.synthetic) {
            (Some(path), _) => TimeSeriesDataset::load_csv(path)?,
            (None, Some(s)) => synthetic_dataset(s.days, s.seed)?,
            (None, None) => unreachable!("validated"),
        })
    }
}

/// Splits resolved against a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSplits {
    pub train: DayRange,
    pub validation: Option<DayRange>,
    pub test: DayRange,
}

/// Clamps the training start to the earliest day with full lag history and
/// checks every range lies inside the data.
pub fn resolve_splits(cfg: &ExperimentConfig, dataset: &TimeSeriesDataset) -> Result<ResolvedSplits> {
    let full = dataset
        .full_days()
        .ok_or_else(|| CliError::Config("dataset holds no complete day".into()))?;
    let earliest = cfg.model.features.earliest_target_day(dataset).max(full.start);
    let s = cfg.split;
    for (name, r) in [("train", Some(s.train)), ("validation", s.validation), ("test", Some(s.test))] {
        if let Some(r) = r {
            if r.start < full.start || r.end > full.end {
                return Err(CliError::Config(format!(
                    "{name} range {} .. {} lies outside the data ({} .. {})",
                    r.start, r.end, full.start, full.end
                )));
            }
        }
    }
    let mut train = s.train;
    if train.start < earliest {
        log::warn!(
            "training starts {earliest} instead of {}: earlier days lack lag history",
            train.start
        );
        train.start = earliest;
    }
    if train.is_empty() {
        return Err(CliError::Config(format!(
            "no training day has full lag history (earliest is {earliest})"
        )));
    }
    for r in s.validation.iter().chain([&s.test]) {
        if r.start < earliest {
            return Err(stlf_core::Error::History {
                target: r.start,
                earliest,
            }
            .into());
        }
    }
    Ok(ResolvedSplits {
        train,
        validation: s.validation,
        test: s.test,
    })
}
