//! Network architectures: the per-hour basic structure with autoregressive
//! chaining, and the ResNet / ResNetPlus residual stages stacked on top of
//! its 24 preliminary forecasts.

mod basic;
mod model;
mod residual;

pub use basic::{BasicCache, BasicStructure, HourNet, CALENDAR_HIDDEN, HIDDEN};
pub use model::{full_model_forward, ArchitectureConfig, Model, ModelCache, ModelParams};
pub use residual::{
    BlockCache, Node, ResNetConfig, ResNetPlusConfig, ResidualBlock, ResidualGraph, ResidualStage,
    ResidualStageConfig, StageCache, BLOCK_HIDDEN,
};

use crate::error::Result;
use crate::nn::{DenseCache, DenseLayer, JobRng};

/// Active dropout during a forward pass (training or MC sampling).
pub struct Dropout<'a> {
    pub p: f64,
    pub rng: &'a mut JobRng,
}

/// Forward cache of a hidden layer, including the scaled dropout mask.
#[derive(Debug, Clone)]
pub struct LayerCache {
    dense: DenseCache,
    mask: Option<Vec<f64>>,
}

pub(crate) fn hidden_forward(
    layer: &DenseLayer,
    x: &[f64],
    dropout: Option<&mut Dropout<'_>>,
) -> Result<(Vec<f64>, LayerCache)> {
    let (mut out, dense) = layer.forward(x)?;
    let mask = match dropout {
        Some(d) if d.p > 0.0 => {
            let (dropped, keep) = crate::nn::dropout_with_rng(d.p, &out, &mut *d.rng);
            out = dropped;
            let scale = 1.0 / (1.0 - d.p);
            Some(keep.into_iter().map(|k| k * scale).collect())
        }
        _ => None,
    };
    Ok((out, LayerCache { dense, mask }))
}

pub(crate) fn hidden_backward(
    layer: &DenseLayer,
    cache: &LayerCache,
    upstream: &[f64],
    grads: &mut DenseLayer,
) -> Result<Vec<f64>> {
    match &cache.mask {
        Some(mask) => {
            let masked: Vec<f64> = upstream.iter().zip(mask).map(|(g, m)| g * m).collect();
            layer.backward_into(&cache.dense, &masked, grads)
        }
        None => layer.backward_into(&cache.dense, upstream, grads),
    }
}
