use crate::error::Result;
use crate::report::{write_json, PrepareReport};

use super::Experiment;

/// Validates the data and splits and writes `prepare.json`.
pub fn prepare(exp: &Experiment) -> Result<PrepareReport> {
    let ds = &exp.dataset;
    let report = PrepareReport {
        rows: ds.len(),
        first_timestamp: ds.start(),
        last_timestamp: ds.end(),
        repaired_gaps: ds.repairs().to_vec(),
        merged_duplicates: ds.merged_duplicates(),
        normalization: ds.normalization().expect("fitted on load"),
        earliest_forecastable_day: exp.config.model.features.earliest_target_day(ds),
        train: exp.splits.train,
        validation: exp.splits.validation,
        test: exp.splits.test,
        fingerprint: ds.fingerprint(),
    };
    write_json(exp.output("prepare.json")?, &report)?;
    Ok(report)
}
