//! Training loss: mean relative error plus a daily range hinge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::HOURS;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub error_term: f64,
    pub range_term: f64,
}

impl LossBreakdown {
    pub fn new(error_term: f64, range_term: f64) -> Self {
        Self {
            total: error_term + range_term,
            error_term,
            range_term,
        }
    }
}

fn check_shapes(pred: &[[f64; HOURS]], actual: &[[f64; HOURS]]) -> Result<()> {
    if pred.len() != actual.len() {
        return Err(Error::shape("loss batch", actual.len(), pred.len()));
    }
    if pred.is_empty() {
        return Err(Error::Argument("loss of an empty batch".into()));
    }
    Ok(())
}

/// Index of the first maximum / minimum.
fn arg_extreme(v: &[f64; HOURS], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for k in 1..HOURS {
        if better(v[k], v[best]) {
            best = k;
        }
    }
    best
}

fn argmax(v: &[f64; HOURS]) -> usize {
    arg_extreme(v, |a, b| a > b)
}

fn argmin(v: &[f64; HOURS]) -> usize {
    arg_extreme(v, |a, b| a < b)
}

/// Mean absolute relative error over all days and hours.
pub fn loss_error(pred: &[[f64; HOURS]], actual: &[[f64; HOURS]]) -> Result<f64> {
    check_shapes(pred, actual)?;
    let mut sum = 0.0;
    for (p, a) in pred.iter().zip(actual) {
        for k in 0..HOURS {
            if !(a[k] > 0.0) {
                return Err(Error::Domain(format!("actual load must be positive, got {}", a[k])));
            }
            sum += (p[k] - a[k]).abs() / a[k];
        }
    }
    Ok(sum / (pred.len() * HOURS) as f64)
}

/// Half the mean of the daily overshoot of the maximum and undershoot of the
/// minimum.
pub fn loss_range(pred: &[[f64; HOURS]], actual: &[[f64; HOURS]]) -> Result<f64> {
    check_shapes(pred, actual)?;
    let mut sum = 0.0;
    for (p, a) in pred.iter().zip(actual) {
        let over = p[argmax(p)] - a[argmax(a)];
        let under = a[argmin(a)] - p[argmin(p)];
        sum += over.max(0.0) + under.max(0.0);
    }
    Ok(sum / (2 * pred.len()) as f64)
}

pub fn loss(pred: &[[f64; HOURS]], actual: &[[f64; HOURS]]) -> Result<LossBreakdown> {
    Ok(LossBreakdown::new(loss_error(pred, actual)?, loss_range(pred, actual)?))
}

/// Loss and its gradient with respect to every forecast. At kinks the
/// one-sided choice is: zero for an exact hit, and the first arg-extreme.
pub fn loss_gradient(pred: &[[f64; HOURS]], actual: &[[f64; HOURS]]) -> Result<(LossBreakdown, Vec<[f64; HOURS]>)> {
    let value = loss(pred, actual)?;
    let n = pred.len() as f64;
    let e_scale = 1.0 / (n * HOURS as f64);
    let r_scale = 1.0 / (2.0 * n);
    let grads = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| {
            let mut g = [0.0; HOURS];
            for k in 0..HOURS {
                let diff = p[k] - a[k];
                if diff != 0.0 {
                    g[k] = diff.signum() * e_scale / a[k];
                }
            }
            let hi = argmax(p);
            if p[hi] > a[argmax(a)] {
                g[hi] += r_scale;
            }
            let lo = argmin(p);
            if a[argmin(a)] > p[lo] {
                g[lo] -= r_scale;
            }
            g
        })
        .collect();
    Ok((value, grads))
}
