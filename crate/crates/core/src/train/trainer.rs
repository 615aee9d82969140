use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arch::{ArchitectureConfig, Dropout, Model};
use crate::data::DayInput;
use crate::error::{Error, Result};
use crate::nn::{job_rng, AdamConfig, AdamState, Parameters};
use crate::HOURS;

use super::ensemble::{EnsembleBundle, Member};
use super::loss::{loss, loss_gradient, LossBreakdown};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Days per Adam step.
    pub batch_size: usize,
    /// Epochs (1-based, after the epoch completes) at which a copy of the
    /// parameters joins the ensemble.
    pub snapshot_epochs: Vec<usize>,
    /// Independent re-initializations.
    pub num_inits: usize,
    pub seed: u64,
    /// Dropout probability on hidden layers during training; 0 disables.
    pub dropout: f64,
    pub adam: AdamConfig,
    pub architecture: ArchitectureConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 700,
            batch_size: 32,
            snapshot_epochs: vec![600, 650, 700],
            num_inits: 5,
            seed: 0,
            dropout: 0.0,
            adam: AdamConfig::default(),
            architecture: ArchitectureConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.num_inits == 0 {
            return Err(Error::Config("num_inits must be at least 1".into()));
        }
        if self.snapshot_epochs.is_empty() {
            return Err(Error::Config("at least one snapshot epoch is required".into()));
        }
        if self.snapshot_epochs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("snapshot_epochs must be strictly ascending".into()));
        }
        if self.snapshot_epochs[0] == 0 || *self.snapshot_epochs.last().unwrap() > self.epochs {
            return Err(Error::Config(format!(
                "snapshot epochs must lie in 1..={}",
                self.epochs
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout must lie in [0, 1), got {}", self.dropout)));
        }
        self.architecture.validate()
    }
}

/// Training and validation days, each carrying its target.
#[derive(Debug, Clone, Default)]
pub struct DataSplits {
    pub train: Vec<DayInput>,
    pub validation: Vec<DayInput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean of the batch losses seen during the epoch (with dropout active).
    pub train: LossBreakdown,
    /// Validation loss after the epoch, dropout off; absent without validation days.
    pub validation: Option<LossBreakdown>,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub init_id: usize,
    pub snapshots: Vec<Member>,
    pub log: Vec<EpochLog>,
}

fn targets(days: &[DayInput]) -> Result<Vec<[f64; HOURS]>> {
    days.iter()
        .map(|d| d.target.ok_or_else(|| Error::Data(format!("day {} has no target loads", d.date))))
        .collect()
}

/// Loss of `model` on `days` without dropout.
pub fn evaluate_loss(model: &Model, days: &[DayInput]) -> Result<LossBreakdown> {
    let actual = targets(days)?;
    let pred = days.iter().map(|d| model.forward(d)).collect::<Result<Vec<_>>>()?;
    loss(&pred, &actual)
}

/// Trains one initialization and returns its snapshots. Deterministic in
/// `(cfg.seed, init_id)`.
pub fn train_single(data: &DataSplits, cfg: &TrainConfig, init_id: usize) -> Result<TrainRun> {
    cfg.validate()?;
    if data.train.len() < cfg.batch_size {
        return Err(Error::Data(format!(
            "{} training days cannot fill a batch of {}",
            data.train.len(),
            cfg.batch_size
        )));
    }
    let train_targets = targets(&data.train)?;
    targets(&data.validation)?;

    let mut rng = job_rng(cfg.seed, init_id as u64);
    let mut model = Model::initialized(cfg.architecture, &mut rng)?;
    let mut grads = model.zeros_like();
    let mut adam = AdamState::new(model.num_params(), cfg.adam);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut snapshots = Vec::with_capacity(cfg.snapshot_epochs.len());
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut sum = LossBreakdown::default();
        for batch in order.chunks(cfg.batch_size) {
            grads.fill_zero();
            let mut preds = Vec::with_capacity(batch.len());
            let mut caches = Vec::with_capacity(batch.len());
            for &i in batch {
                let mut dropout = Dropout { p: cfg.dropout, rng: &mut rng };
                let active = (cfg.dropout > 0.0).then_some(&mut dropout);
                let (y, cache) = model.forward_with(&data.train[i], active)?;
                preds.push(y);
                caches.push(cache);
            }
            let actual: Vec<[f64; HOURS]> = batch.iter().map(|&i| train_targets[i]).collect();
            let (value, upstream) = loss_gradient(&preds, &actual)?;
            if !value.total.is_finite() {
                return Err(Error::Divergence { init_id, epoch });
            }
            let w = batch.len() as f64;
            sum.error_term += w * value.error_term;
            sum.range_term += w * value.range_term;
            for (cache, up) in caches.iter().zip(&upstream) {
                model.backward(cache, up, &mut grads)?;
            }
            adam.step_params(&mut model, &grads)?;
        }
        let n = data.train.len() as f64;
        let train = LossBreakdown::new(sum.error_term / n, sum.range_term / n);
        let validation = if data.validation.is_empty() {
            None
        } else {
            let v = evaluate_loss(&model, &data.validation)?;
            if !v.total.is_finite() {
                return Err(Error::Divergence { init_id, epoch });
            }
            Some(v)
        };
        log::debug!(
            "init {init_id} epoch {epoch}: train {:.6} validation {:?}",
            train.total,
            validation.map(|v| v.total)
        );
        log.push(EpochLog {
            epoch,
            train,
            validation,
            wall_ms: started.elapsed().as_millis() as u64,
        });
        if cfg.snapshot_epochs.contains(&epoch) {
            log::info!("init {init_id}: snapshot at epoch {epoch}, train loss {:.6}", train.total);
            snapshots.push(Member {
                init_id,
                epoch,
                model: model.clone(),
            });
        }
    }
    Ok(TrainRun { init_id, snapshots, log })
}

/// Trains `cfg.num_inits` initializations on up to `jobs` threads and pools
/// their snapshots, ordered by initialization then epoch.
pub fn train_ensemble(data: &DataSplits, cfg: &TrainConfig, jobs: usize) -> Result<(EnsembleBundle, Vec<TrainRun>)> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker threads: {e}")))?;
    let runs: Vec<TrainRun> = pool.install(|| {
        (0..cfg.num_inits)
            .into_par_iter()
            .map(|i| train_single(data, cfg, i))
            .collect::<Result<Vec<_>>>()
    })?;
    let members = runs.iter().flat_map(|r| r.snapshots.iter().cloned()).collect();
    let bundle = EnsembleBundle::new(members, cfg)?;
    Ok((bundle, runs))
}
