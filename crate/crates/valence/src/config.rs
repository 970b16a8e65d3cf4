//! Pipeline configuration read from TOML. Every section and field is optional;
//! missing values take the library defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use valence_core::{ActorConfig, Normalization, PoolingMode, SimConfig, SplitRatios, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub pooling: PoolingMode,
    pub normalize: Normalization,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { pooling: PoolingMode::Average, normalize: Normalization::L1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Episodes generated by `simulate` and `generate` unless overridden.
    pub episodes: usize,
    pub simulator: SimConfig,
    pub actor: ActorConfig,
    pub split: SplitRatios,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            episodes: 100,
            simulator: SimConfig::default(),
            actor: ActorConfig::default(),
            split: SplitRatios::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Toml { path: String, source: toml::de::Error },
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text).map_err(|source| ConfigError::Toml { path: path.display().to_string(), source })
    }

    /// Loads `path`, or the defaults when no path is given.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, ConfigError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Applies a command-line seed to every seeded stage.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(seed) = seed {
            self.simulator.seed = seed;
            self.actor.seed = seed;
            self.train.seed = seed;
        }
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }
}
