use serde::{Deserialize, Serialize};

/// Fixed SELU scale and negative-branch saturation constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeluConstants {
    pub lambda: f64,
    pub alpha: f64,
}

pub const SELU: SeluConstants = SeluConstants {
    lambda: 1.0577,
    alpha: 1.6733,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    /// Leaky ReLU with a learned per-unit slope on the negative half axis.
    Prelu,
    Selu,
}

/// Applies `kind` to a pre-activation. `slope` is only read for PReLU.
#[inline]
pub fn activate(kind: Activation, y: f64, slope: Option<f64>) -> f64 {
    match kind {
        Activation::Identity => y,
        Activation::Relu => y.max(0.0),
        Activation::Prelu => {
            if y > 0.0 {
                y
            } else {
                slope.unwrap_or(0.0) * y
            }
        }
        Activation::Selu => {
            if y > 0.0 {
                SELU.lambda * y
            } else {
                SELU.lambda * (SELU.alpha * y.exp() - SELU.alpha)
            }
        }
    }
}

/// d activate / d y. At exactly zero the negative branch is used.
#[inline]
pub fn activation_derivative(kind: Activation, y: f64, slope: Option<f64>) -> f64 {
    match kind {
        Activation::Identity => 1.0,
        Activation::Relu => {
            if y > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Prelu => {
            if y > 0.0 {
                1.0
            } else {
                slope.unwrap_or(0.0)
            }
        }
        Activation::Selu => {
            if y > 0.0 {
                SELU.lambda
            } else {
                SELU.lambda * SELU.alpha * y.exp()
            }
        }
    }
}
