//! Loss, snapshot-ensemble training, evaluation and checkpoints.

mod checkpoint;
mod ensemble;
mod loss;
mod trainer;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_bundle, load_checkpoint, load_checkpoint_for, manifest_path,
    save_bundle, save_checkpoint, BundleManifest, CheckpointDescriptor, ManifestEntry, FORMAT_VERSION, MAGIC,
    MANIFEST_FILE,
};
pub use ensemble::{
    config_hash, ensemble_predict, evaluate_mape, forecast_range, mape_report, BundleMetadata, DayForecast,
    EnsembleBundle, Forecaster, MapeReport, Member, MonthlyMape, Persistence,
};
pub use loss::{loss, loss_error, loss_gradient, loss_range, LossBreakdown};
pub use trainer::{evaluate_loss, train_ensemble, train_single, DataSplits, EpochLog, TrainConfig, TrainRun};
