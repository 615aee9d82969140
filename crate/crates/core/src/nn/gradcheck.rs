//! Central-difference verification of reverse-mode gradients.

use crate::error::{Error, Result};

/// Denominator floor of the relative error, so that entries whose true
/// gradient is (numerically) zero are compared in absolute terms.
pub const GRADCHECK_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// max_i |analytic_i - numeric_i| / max(|analytic_i|, |numeric_i|, floor)
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Index of the worst relative error.
    pub worst_index: usize,
    pub checked: usize,
}

/// `(f(x + eps e_i) - f(x - eps e_i)) / (2 eps)` for every coordinate.
pub fn central_difference(x: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + eps;
            let plus = f(&probe);
            probe[i] = x[i] - eps;
            let minus = f(&probe);
            probe[i] = x[i];
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

/// Compares `analytic` (the backprop gradient of `loss` at `x`) against
/// central differences with step `eps`.
///
/// The loss must be deterministic: it is evaluated twice at `x` and a
/// differing result (e.g. dropout left on) is rejected.
pub fn gradient_check(
    x: &[f64],
    analytic: &[f64],
    eps: f64,
    mut loss: impl FnMut(&[f64]) -> f64,
) -> Result<GradCheckReport> {
    if analytic.len() != x.len() {
        return Err(Error::shape("gradient check", x.len(), analytic.len()));
    }
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("finite-difference step must be positive, got {eps}")));
    }
    let a = loss(x);
    let b = loss(x);
    if a.to_bits() != b.to_bits() {
        return Err(Error::Contract(
            "loss is not deterministic; disable dropout before checking gradients".into(),
        ));
    }
    let numeric = central_difference(x, eps, loss);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst_index: 0,
        checked: x.len(),
    };
    for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        let abs = (a - n).abs();
        let rel = abs / a.abs().max(n.abs()).max(GRADCHECK_FLOOR);
        if !(rel <= report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
        report.max_abs_error = report.max_abs_error.max(abs);
    }
    Ok(report)
}
