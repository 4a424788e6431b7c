//! Run configuration: one JSON document holding every tunable, with
//! defaults for all of them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eval::EvalConfig;
use crate::pipeline::PipelineConfig;
use crate::providers::http::HttpClient;
use crate::providers::mock::{FixedPreference, HashEmbedder, HashPreference, MockChat};
use crate::providers::{ChatModel, Embedder, PreferenceModel, ProviderConfig, ProviderError};
use crate::reward::RewardConfig;
use crate::sim::OfflineResponder;

pub const RUN_CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("unsupported config schema_version {0}")]
    Version(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Deterministic in-process provider.
    #[default]
    Mock,
    /// OpenAI-compatible HTTP endpoint.
    Http,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSpec {
    pub backend: Backend,
    pub settings: ProviderConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PreferenceSpec {
    /// Hash of query and plan text, seeded by the run seed.
    #[default]
    Hash,
    Fixed { raw: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub sandbox: Option<PathBuf>,
    pub seed: u64,
    pub chat: ProviderSpec,
    pub embed: ProviderSpec,
    pub judge: ProviderSpec,
    pub preference: PreferenceSpec,
    pub pipeline: PipelineConfig,
    pub reward: RewardConfig,
    pub eval: EvalConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: RUN_CONFIG_VERSION,
            sandbox: None,
            seed: 0,
            chat: ProviderSpec::default(),
            embed: ProviderSpec::default(),
            judge: ProviderSpec::default(),
            preference: PreferenceSpec::default(),
            pipeline: PipelineConfig::default(),
            reward: RewardConfig::default(),
            eval: EvalConfig::default(),
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != RUN_CONFIG_VERSION {
            return Err(ConfigError::Version(self.schema_version));
        }
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        for spec in [&self.chat, &self.embed, &self.judge] {
            spec.settings.validate().map_err(|e| invalid(&e))?;
        }
        self.pipeline.ccot.validate().map_err(|e| invalid(&e))?;
        self.reward.gate.validate().map_err(|e| invalid(&e))?;
        if let Some(c) = &self.pipeline.cluster {
            c.validate().map_err(|e| invalid(&e))?;
        }
        if !(self.eval.route_factor > 0.0 && self.eval.meal_price_slack >= 0.0) {
            return Err(ConfigError::Invalid("eval thresholds must be positive".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn chat_model(&self) -> Result<Box<dyn ChatModel>, ProviderError> {
        chat_from(&self.chat, self.seed)
    }

    pub fn judge_model(&self) -> Result<Box<dyn ChatModel>, ProviderError> {
        chat_from(&self.judge, self.seed)
    }

    pub fn embedder(&self) -> Result<Box<dyn Embedder>, ProviderError> {
        Ok(match self.embed.backend {
            Backend::Mock => Box::new(HashEmbedder::new(self.seed)),
            Backend::Http => Box::new(HttpClient::from_config(self.embed.settings.clone())?),
        })
    }

    pub fn preference_model(&self) -> Box<dyn PreferenceModel> {
        match self.preference {
            PreferenceSpec::Hash => Box::new(HashPreference { seed: self.seed }),
            PreferenceSpec::Fixed { raw } => Box::new(FixedPreference(raw)),
        }
    }
}

fn chat_from(spec: &ProviderSpec, seed: u64) -> Result<Box<dyn ChatModel>, ProviderError> {
    Ok(match spec.backend {
        Backend::Mock => Box::new(MockChat::new(OfflineResponder, seed)),
        Backend::Http => Box::new(HttpClient::from_config(spec.settings.clone())?),
    })
}
