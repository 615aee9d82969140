use serde::{Deserialize, Serialize};

use super::params::Parameters;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(num_params: usize, config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            step_count: 0,
        }
    }

    /// One bias-corrected Adam update of a flat parameter vector.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.first_moment.len() {
            return Err(Error::shape("adam parameters", self.first_moment.len(), params.len()));
        }
        if grads.len() != params.len() {
            return Err(Error::shape("adam gradients", params.len(), grads.len()));
        }
        self.step_count += 1;
        let (c1, c2) = self.corrections();
        let AdamConfig { lr, beta1, beta2, epsilon } = self.config;
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + epsilon);
        }
        Ok(())
    }

    /// Same update applied to a structured parameter set, with gradients
    /// held in a value of the same shape.
    pub fn step_params<P: Parameters>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let flat_grads = super::params::flatten(grads);
        if flat_grads.len() != self.first_moment.len() {
            return Err(Error::shape("adam gradients", self.first_moment.len(), flat_grads.len()));
        }
        if params.num_params() != flat_grads.len() {
            return Err(Error::shape("adam parameters", flat_grads.len(), params.num_params()));
        }
        self.step_count += 1;
        let (c1, c2) = self.corrections();
        let AdamConfig { lr, beta1, beta2, epsilon } = self.config;
        let mut offset = 0;
        let (m, v) = (&mut self.first_moment, &mut self.second_moment);
        params.visit_mut(&mut |_, slice| {
            for p in slice.iter_mut() {
                let g = flat_grads[offset];
                m[offset] = beta1 * m[offset] + (1.0 - beta1) * g;
                v[offset] = beta2 * v[offset] + (1.0 - beta2) * g * g;
                *p -= lr * (m[offset] / c1) / ((v[offset] / c2).sqrt() + epsilon);
                offset += 1;
            }
        });
        Ok(())
    }

    fn corrections(&self) -> (f64, f64) {
        let t = self.step_count as i32;
        (1.0 - self.config.beta1.powi(t), 1.0 - self.config.beta2.powi(t))
    }
}

pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    state.step(params, grads)
}
