use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::activation::{activate, activation_derivative, Activation};
use super::params::Parameters;
use crate::error::{Error, Result};

const DEFAULT_PRELU_SLOPE: f64 = 0.25;

/// Affine map followed by an element-wise activation.
///
/// Weights are row-major with shape `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
    pub prelu_slopes: Option<Vec<f64>>,
}

/// Values retained by the forward pass for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCache {
    pub input: Vec<f64>,
    pub pre_activation: Vec<f64>,
}

impl DenseLayer {
    /// Zero weights and biases; PReLU slopes start at 0.25.
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
            activation,
            prelu_slopes: (activation == Activation::Prelu).then(|| vec![DEFAULT_PRELU_SLOPE; out_dim]),
        }
    }

    pub fn from_parts(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.len() != in_dim * out_dim {
            return Err(Error::shape("dense weights", in_dim * out_dim, weights.len()));
        }
        if biases.len() != out_dim {
            return Err(Error::shape("dense biases", out_dim, biases.len()));
        }
        let mut layer = Self::new(in_dim, out_dim, activation);
        layer.weights = weights;
        layer.biases = biases;
        Ok(layer)
    }

    /// Zero-mean Gaussian weights with variance 1/fan-in, zero biases.
    pub fn init_lecun<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let normal = Normal::new(0.0, (1.0 / self.in_dim as f64).sqrt()).expect("valid std");
        for w in &mut self.weights {
            *w = normal.sample(rng);
        }
        self.biases.fill(0.0);
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    #[inline]
    fn slope(&self, j: usize) -> Option<f64> {
        self.prelu_slopes.as_ref().map(|s| s[j])
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
        if x.len() != self.in_dim {
            return Err(Error::shape("dense input", self.in_dim, x.len()));
        }
        let mut pre = self.biases.clone();
        for (j, p) in pre.iter_mut().enumerate() {
            let row = &self.weights[j * self.in_dim..(j + 1) * self.in_dim];
            *p += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        let out = pre
            .iter()
            .enumerate()
            .map(|(j, &y)| activate(self.activation, y, self.slope(j)))
            .collect();
        Ok((
            out,
            DenseCache {
                input: x.to_vec(),
                pre_activation: pre,
            },
        ))
    }

    /// Accumulates parameter gradients into `grads` and returns d loss / d input.
    pub fn backward_into(&self, cache: &DenseCache, upstream: &[f64], grads: &mut DenseLayer) -> Result<Vec<f64>> {
        if cache.input.len() != self.in_dim || cache.pre_activation.len() != self.out_dim {
            return Err(Error::Contract(format!(
                "cache of a {}x{} layer used with a {}x{} layer",
                cache.pre_activation.len(),
                cache.input.len(),
                self.out_dim,
                self.in_dim
            )));
        }
        if upstream.len() != self.out_dim {
            return Err(Error::shape("dense upstream gradient", self.out_dim, upstream.len()));
        }
        if grads.in_dim != self.in_dim || grads.out_dim != self.out_dim {
            return Err(Error::Contract("gradient accumulator has a different shape".into()));
        }
        let mut dx = vec![0.0; self.in_dim];
        for j in 0..self.out_dim {
            let y = cache.pre_activation[j];
            let dy = upstream[j] * activation_derivative(self.activation, y, self.slope(j));
            if let (Some(gs), true) = (grads.prelu_slopes.as_mut(), y <= 0.0) {
                gs[j] += upstream[j] * y;
            }
            if dy == 0.0 {
                continue;
            }
            grads.biases[j] += dy;
            let row = j * self.in_dim..(j + 1) * self.in_dim;
            for ((gw, w), (x, d)) in grads.weights[row.clone()]
                .iter_mut()
                .zip(&self.weights[row])
                .zip(cache.input.iter().zip(dx.iter_mut()))
            {
                *gw += dy * x;
                *d += dy * w;
            }
        }
        Ok(dx)
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = Self::new(self.in_dim, self.out_dim, self.activation);
        if let Some(s) = z.prelu_slopes.as_mut() {
            s.fill(0.0);
        }
        z
    }
}

impl Parameters for DenseLayer {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
        f("weight", &self.weights);
        f("bias", &self.biases);
        if let Some(s) = &self.prelu_slopes {
            f("slope", s);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        f("weight", &mut self.weights);
        f("bias", &mut self.biases);
        if let Some(s) = &mut self.prelu_slopes {
            f("slope", s);
        }
    }
}

pub fn dense_forward(layer: &DenseLayer, x: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
    layer.forward(x)
}

/// Returns `(d loss / d input, parameter gradients)`.
pub fn dense_backward(layer: &DenseLayer, cache: &DenseCache, upstream: &[f64]) -> Result<(Vec<f64>, DenseLayer)> {
    let mut grads = layer.zeros_like();
    let dx = layer.backward_into(cache, upstream, &mut grads)?;
    Ok((dx, grads))
}
