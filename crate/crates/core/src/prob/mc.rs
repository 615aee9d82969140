use chrono::{Datelike, NaiveDate};

use crate::arch::{Dropout, Model};
use crate::data::DayInput;
use crate::error::{Error, Result};
use crate::nn::job_rng;
use crate::HOURS;

/// `m` stochastic forward passes with fresh dropout masks. Sample `i` draws
/// its masks from stream `i` of `seed`.
pub fn mc_dropout_samples(model: &Model, day: &DayInput, m: usize, p: f64, seed: u64) -> Result<Vec<[f64; HOURS]>> {
    if m < 2 {
        return Err(Error::Argument(format!("MC dropout needs at least 2 samples, got {m}")));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Argument(format!("dropout probability must lie in [0, 1), got {p}")));
    }
    (0..m)
        .map(|i| {
            let mut rng = job_rng(seed, i as u64);
            let mut dropout = Dropout { p, rng: &mut rng };
            Ok(model.forward_with(day, Some(&mut dropout))?.0)
        })
        .collect()
}

/// Per-hour population variance (divisor `M`).
pub fn model_variance(samples: &[[f64; HOURS]]) -> Result<[f64; HOURS]> {
    if samples.len() < 2 {
        return Err(Error::Argument(format!(
            "variance needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mut out = [0.0; HOURS];
    for (k, o) in out.iter_mut().enumerate() {
        // Shifted by the first sample so identical rows give exactly zero.
        let shift = samples[0][k];
        let mean = samples.iter().map(|s| s[k] - shift).sum::<f64>() / n;
        *o = samples.iter().map(|s| (s[k] - shift - mean).powi(2)).sum::<f64>() / n;
    }
    Ok(out)
}

/// Distinct, reproducible MC seed for each forecast day.
pub fn day_seed(seed: u64, date: NaiveDate) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(date.num_days_from_ce() as u64)
}
