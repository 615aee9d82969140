use serde::{Deserialize, Serialize};

use crate::data::{DayInput, FeatureConfig};
use crate::error::{Error, Result};
use crate::nn::{Activation, JobRng, Parameters};
use crate::HOURS;

use super::basic::{BasicCache, BasicStructure};
use super::residual::{ResNetPlusConfig, ResidualStage, ResidualStageConfig, StageCache};
use super::Dropout;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchitectureConfig {
    pub features: FeatureConfig,
    /// Feed season / weekday / holiday codes; when false they are zeroed.
    pub use_calendar: bool,
    pub stage: ResidualStageConfig,
    /// Activation of the hidden layer inside each residual block.
    pub block_activation: Activation,
    /// Share one hourly subnetwork across all 24 hours (not supported).
    pub share_weights: bool,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            use_calendar: true,
            stage: ResidualStageConfig::ResNetPlus(ResNetPlusConfig::default()),
            block_activation: Activation::Selu,
            share_weights: false,
        }
    }
}

impl ArchitectureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.share_weights {
            return Err(Error::Config(
                "weight sharing across hourly subnetworks is not supported".into(),
            ));
        }
        if self.features.month_lags == 0 {
            return Err(Error::Config("month_lags must be at least 1".into()));
        }
        if self.block_activation == Activation::Prelu {
            return Err(Error::Config(
                "residual blocks support identity, relu and selu activations".into(),
            ));
        }
        self.stage.validate()
    }
}

/// Basic structure followed by an optional residual stage.
///
/// The same type doubles as its own gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ArchitectureConfig,
    pub basic: BasicStructure,
    pub stage: Option<ResidualStage>,
}

/// Gradients share the model's layout.
pub type ModelParams = Model;

#[derive(Debug, Clone)]
pub struct ModelCache {
    basic: BasicCache,
    stage: Option<StageCache>,
}

impl Model {
    /// All weights and biases zero.
    pub fn zeroed(config: ArchitectureConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            basic: BasicStructure::zeroed(config.features.month_lags, config.use_calendar),
            stage: ResidualStage::zeroed(config.stage, config.block_activation)?,
        })
    }

    /// Weights drawn from N(0, 1/fan_in), biases zero.
    pub fn initialized(config: ArchitectureConfig, rng: &mut JobRng) -> Result<Self> {
        let mut m = Self::zeroed(config)?;
        m.basic.initialize(rng);
        if let Some(s) = &mut m.stage {
            s.initialize(rng);
        }
        Ok(m)
    }

    /// Deterministic day-ahead forecast in normalized units.
    pub fn forward(&self, day: &DayInput) -> Result<[f64; HOURS]> {
        Ok(self.forward_with(day, None)?.0)
    }

    pub fn forward_with(
        &self,
        day: &DayInput,
        mut dropout: Option<&mut Dropout<'_>>,
    ) -> Result<([f64; HOURS], ModelCache)> {
        let (prelim, basic) = self.basic.forward(day, dropout.as_deref_mut())?;
        let Some(stage) = &self.stage else {
            return Ok((prelim, ModelCache { basic, stage: None }));
        };
        let (y, cache) = stage.forward(&prelim, dropout)?;
        let mut out = [0.0; HOURS];
        out.copy_from_slice(&y);
        Ok((out, ModelCache { basic, stage: Some(cache) }))
    }

    /// Accumulates d loss / d parameters into `grads`.
    pub fn backward(&self, cache: &ModelCache, upstream: &[f64; HOURS], grads: &mut Model) -> Result<()> {
        let d_prelim = match (&self.stage, &cache.stage, &mut grads.stage) {
            (Some(stage), Some(c), Some(g)) => {
                let d = stage.backward(c, upstream, g)?;
                let mut a = [0.0; HOURS];
                a.copy_from_slice(&d);
                a
            }
            (None, None, None) => *upstream,
            _ => return Err(Error::Contract("model, cache and gradients disagree on the residual stage".into())),
        };
        self.basic.backward(&cache.basic, &d_prelim, &mut grads.basic)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config,
            basic: self.basic.zeros_like(),
            stage: self.stage.as_ref().map(ResidualStage::zeros_like),
        }
    }
}

impl Parameters for Model {
    fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
        self.basic.visit(f);
        if let Some(s) = &self.stage {
            s.visit(f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.basic.visit_mut(f);
        if let Some(s) = &mut self.stage {
            s.visit_mut(f);
        }
    }
}

/// Forecast of `day` by `model` without dropout.
pub fn full_model_forward(model: &Model, day: &DayInput) -> Result<[f64; HOURS]> {
    model.forward(day)
}
