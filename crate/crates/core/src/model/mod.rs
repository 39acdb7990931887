//! Small pillar-based network predicting per-cell evidence, with
//! hand-written backpropagation and an Adam trainer.

mod forward;
mod io;
mod train;

use std::fmt::Debug;

use num_traits::{Float, NumAssign};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{EvidentialGrid, GridSpec};
use crate::pointcloud::{normalize_intensity, pillarize, PillarLimits, PointCloud, FEATURE_DIM};
use crate::rng;

pub use io::{decode_weights, encode_weights, load_weights, save_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION};
pub use train::{load_training_set, train, Adam, EpochLog, TrainConfig, TrainingLog, TrainingSample};

/// Scalar type of the network: `f32` for training, `f64` for gradient
/// checks.
pub trait Real: Float + NumAssign + Default + Debug + Send + Sync + 'static {
    fn cast_from(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    fn cast_from(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn cast_from(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}

/// Output channels of the evidence head: free and occupied.
pub const HEAD_CHANNELS: usize = 2;
const KERNEL: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub grid: GridSpec,
    /// Width of the per-point encoder and of the scattered feature map.
    pub pillar_feature_dim: usize,
    /// Output channels of each 3×3 convolution.
    pub conv_channels: Vec<usize>,
    pub head_channels: usize,
    pub pillars: PillarLimits,
    /// Intensities are divided by this percentile before encoding.
    pub intensity_percentile: f64,
    /// Initialisation seed.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            grid: GridSpec::desk(),
            pillar_feature_dim: 16,
            conv_channels: vec![16, 16],
            head_channels: HEAD_CHANNELS,
            pillars: PillarLimits::default(),
            intensity_percentile: 99.0,
            seed: 0,
        }
    }
}

/// One named parameter tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    /// Inputs per output unit, used for initialisation.
    pub fan_in: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    fn is_bias(&self) -> bool {
        self.name.ends_with(".bias")
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.pillars.validate()?;
        if self.head_channels != HEAD_CHANNELS {
            return Err(Error::Config(format!(
                "head must have {HEAD_CHANNELS} output channels, got {}",
                self.head_channels
            )));
        }
        if self.pillar_feature_dim == 0 || self.conv_channels.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if !(self.intensity_percentile > 0.0 && self.intensity_percentile <= 100.0) {
            return Err(Error::Config(format!(
                "intensity percentile must lie in (0, 100], got {}",
                self.intensity_percentile
            )));
        }
        Ok(())
    }

    /// Parameter tensors in storage (and file) order.
    pub fn layout(&self) -> Vec<Block> {
        let mut blocks = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, shape: Vec<usize>, fan_in: usize| {
            let b = Block {
                name,
                shape,
                offset,
                fan_in,
            };
            offset += b.len();
            blocks.push(b);
        };
        let p = self.pillar_feature_dim;
        push("encoder.weight".into(), vec![p, FEATURE_DIM], FEATURE_DIM);
        push("encoder.bias".into(), vec![p], FEATURE_DIM);
        let mut c_in = p;
        for (l, &c_out) in self.conv_channels.iter().enumerate() {
            let fan = c_in * KERNEL * KERNEL;
            push(format!("conv{l}.weight"), vec![c_out, c_in, KERNEL, KERNEL], fan);
            push(format!("conv{l}.bias"), vec![c_out], fan);
            c_in = c_out;
        }
        push("head.weight".into(), vec![self.head_channels, c_in], c_in);
        push("head.bias".into(), vec![self.head_channels], c_in);
        blocks
    }

    pub fn param_count(&self) -> usize {
        self.layout().iter().map(Block::len).sum()
    }
}

/// Network configuration plus its flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T: Real> {
    config: ModelConfig,
    params: Vec<T>,
}

impl<T: Real> Model<T> {
    /// He-uniform weights and zero biases, drawn from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(config.seed, 0);
        let mut params = vec![T::zero(); config.param_count()];
        for block in config.layout() {
            if block.is_bias() {
                continue;
            }
            let bound = (6.0 / block.fan_in as f64).sqrt();
            for v in &mut params[block.range()] {
                *v = T::cast_from(rng.random_range(-bound..bound));
            }
        }
        Ok(Model { config, params })
    }

    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let params = vec![T::zero(); config.param_count()];
        Ok(Model { config, params })
    }

    pub fn from_params(config: ModelConfig, params: Vec<T>) -> Result<Self> {
        config.validate()?;
        let expected = config.param_count();
        if params.len() != expected {
            return Err(Error::Shape(format!(
                "configuration needs {expected} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("parameters must be finite".into()));
        }
        Ok(Model { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    /// The same network in another precision.
    pub fn cast<U: Real>(&self) -> Model<U> {
        Model {
            config: self.config.clone(),
            params: self.params.iter().map(|v| U::cast_from(v.as_f64())).collect(),
        }
    }

    fn block(&self, blocks: &[Block], name: &str) -> std::ops::Range<usize> {
        blocks.iter().find(|b| b.name == name).expect("known block").range()
    }

    /// Normalises, pillarizes (seed 0) and runs the network on one cloud.
    pub fn predict(&self, cloud: &PointCloud, spec: &GridSpec) -> Result<EvidentialGrid> {
        if spec != &self.config.grid {
            return Err(Error::Config(format!(
                "model was built for grid {:?}, asked for {:?}",
                self.config.grid, spec
            )));
        }
        let cloud = normalize_intensity(cloud, self.config.intensity_percentile)?;
        let pillars = pillarize(&cloud, spec, &self.config.pillars, 0)?;
        self.forward(&pillars)
    }
}
