//! The rate-versatile transformer classifier.
//!
//! Positional encoding, a stack of post-norm encoder layers and a
//! temporal max-pool + linear-softmax head. Every head projects to the full
//! model width (`C x C` per head, `ZC x C` merge), and the attention scale
//! uses `d = C`.
//!
//! Everything runs in `f64` with hand-written backpropagation; the model is
//! meant for desk-scale experiments, not throughput.

mod adam;
mod backward;
mod checkpoint;
mod encoding;
mod flops;
mod forward;
mod params;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use backward::loss_and_grad;
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use encoding::{positional_encode, positional_encoding};
pub use flops::{estimate_flops, FlopBreakdown};
pub use forward::{
    attention, attention_weights, classify, encoder_forward, layer_norm, Classification,
    ForwardTrace,
};
pub use params::{EncoderParams, Params};

use crate::csi::CsiInstance;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionalEncoding {
    /// Sinusoids of the row index.
    SinusoidalIndex,
    /// Sinusoids of `t / T * time_positions`, i.e. of physical time.
    SinusoidalTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Model width; equals the subcarrier count of the input.
    pub subcarriers: usize,
    pub heads: usize,
    pub layers: usize,
    pub ffn_hidden: usize,
    pub classes: usize,
    pub pos_encoding: PositionalEncoding,
    /// Position scale for [`PositionalEncoding::SinusoidalTime`].
    pub time_positions: f64,
    /// Wrap the feed-forward block in a second residual + layer norm.
    /// `false` gives the bare `A = FFN(Norm(x_A + x'))` encoder.
    pub post_ffn_norm: bool,
    pub norm_eps: f64,
    pub init_seed: u64,
    pub init_scale: f64,
}

impl ModelConfig {
    pub fn new(
        subcarriers: usize,
        heads: usize,
        layers: usize,
        ffn_hidden: usize,
        classes: usize,
    ) -> Self {
        Self {
            subcarriers,
            heads,
            layers,
            ffn_hidden,
            classes,
            pos_encoding: PositionalEncoding::SinusoidalIndex,
            time_positions: 1000.0,
            post_ffn_norm: true,
            norm_eps: 1e-10,
            init_seed: 0,
            init_scale: 1.0 / (subcarriers.max(1) as f64).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("subcarriers", self.subcarriers),
            ("heads", self.heads),
            ("layers", self.layers),
            ("ffn_hidden", self.ffn_hidden),
            ("classes", self.classes),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::config(format!("model {name} must be >= 1")));
            }
        }
        if !(self.norm_eps > 0.0 && self.init_scale >= 0.0 && self.time_positions > 0.0) {
            return Err(Error::config(
                "norm_eps and time_positions must be positive, init_scale nonnegative",
            ));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::new(16, 2, 2, 64, 3)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrvModel {
    pub config: ModelConfig,
    pub params: Params,
}

impl SrvModel {
    /// Seeded uniform(-init_scale, init_scale) weights, unit norm gains and
    /// zero biases.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let params = Params::init(&config);
        Ok(Self { config, params })
    }

    pub fn from_parts(config: ModelConfig, params: Params) -> Result<Self> {
        config.validate()?;
        if !params.matches(&config) {
            return Err(Error::config(
                "parameter shapes do not match the model config",
            ));
        }
        Ok(Self { config, params })
    }

    fn check_width(&self, instance: &CsiInstance) -> Result<()> {
        if instance.subcarriers() != self.config.subcarriers {
            return Err(Error::DimensionMismatch {
                expected: self.config.subcarriers,
                actual: instance.subcarriers(),
            });
        }
        if instance.is_empty() {
            return Err(Error::DegenerateInstance("no rows to classify".into()));
        }
        Ok(())
    }

    /// Class probabilities for one instance of any length.
    pub fn forward(&self, instance: &CsiInstance) -> Result<Vec<f64>> {
        self.check_width(instance)?;
        Ok(forward::forward_values(
            self,
            &instance.features(),
            instance.timestamps(),
            instance.duration(),
        )
        .probs)
    }

    /// Forward pass keeping every activation needed by backpropagation.
    pub fn forward_traced(&self, instance: &CsiInstance) -> Result<ForwardTrace> {
        self.check_width(instance)?;
        Ok(forward::forward_traced(
            self,
            &instance.features(),
            instance.timestamps(),
            instance.duration(),
        ))
    }

    pub fn predict(&self, instance: &CsiInstance) -> Result<usize> {
        let probs = self.forward(instance)?;
        Ok(argmax(&probs))
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
