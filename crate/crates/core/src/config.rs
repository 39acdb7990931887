//! JSON run configuration shared by the command-line tools.
//!
//! Every section and field is optional and falls back to its default;
//! unknown keys are rejected so typos do not pass silently.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::geometric_ism::GeometricIsmParams;
use crate::loss::LossConfig;
use crate::model::{ModelConfig, TrainConfig};
use crate::synth::DatasetConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub geometric: GeometricIsmParams,
    pub loss: LossConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.geometric.validate()?;
        self.loss.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        self.eval.truth.validate()?;
        if self.dataset.grid != self.model.grid {
            return Err(Error::Config(format!(
                "dataset grid {:?} and model grid {:?} differ",
                self.dataset.grid, self.model.grid
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}
