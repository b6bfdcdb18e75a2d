//! TOML gateway configuration.
//!
//! ```toml
//! listen = "127.0.0.1:8080"
//! model_path = "model.json"
//!
//! [embedding]
//! url = "http://127.0.0.1:9000/embed"
//! timeout_ms = 2000
//!
//! [[endpoints]]
//! arm = "babbage-002"
//! base_url = "https://api.openai.com"
//! model = "babbage-002"
//! auth_env = "OPENAI_API_KEY"
//! template = "openai_sst2"
//! timeout_ms = 10000
//! price_per_1k = "0.0004"
//! ```

use std::path::{Path, PathBuf};

use banditroute::prompt::TEMPLATE_IDS;
use banditroute::{Price, Roster};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("config does not match the model roster: {0}")]
    Roster(String),
    #[error("invalid endpoint {arm:?}: {reason}")]
    Endpoint { arm: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub url: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

/// One provider endpoint. `auth_env` names the environment variable that holds
/// the bearer token; the token itself never appears in config.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub arm: String,
    pub base_url: String,
    pub model: String,
    #[serde(default)]
    pub auth_env: Option<String>,
    pub template: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    pub price_per_1k: Price,
}

fn default_timeout_ms() -> u64 {
    10_000
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    pub model_path: PathBuf,
    #[serde(default)]
    pub embedding: Option<EmbeddingConfig>,
    pub endpoints: Vec<EndpointConfig>,
}

impl GatewayConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: GatewayConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.display().to_string(), reason: e.to_string() })?;
        if cfg.model_path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.model_path = dir.join(&cfg.model_path);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text, path)
    }

    /// Endpoints reordered to roster order. Each arm needs exactly one endpoint
    /// whose price matches the roster.
    pub fn endpoints_for(&self, roster: &Roster) -> Result<Vec<EndpointConfig>, ConfigError> {
        for ep in &self.endpoints {
            if ep.timeout_ms == 0 {
                return Err(ConfigError::Endpoint { arm: ep.arm.clone(), reason: "timeout_ms must be > 0".into() });
            }
            if !TEMPLATE_IDS.contains(&ep.template.as_str()) {
                return Err(ConfigError::Endpoint {
                    arm: ep.arm.clone(),
                    reason: format!("unknown template {:?} (known: {})", ep.template, TEMPLATE_IDS.join(", ")),
                });
            }
            if roster.by_name(&ep.arm).is_none() {
                return Err(ConfigError::Roster(format!("endpoint for unknown arm {:?}", ep.arm)));
            }
        }
        roster
            .arms()
            .iter()
            .map(|arm| {
                let mut matching = self.endpoints.iter().filter(|e| e.arm == arm.name);
                let ep = matching.next().ok_or_else(|| ConfigError::Roster(format!("no endpoint for arm {:?}", arm.name)))?;
                if matching.next().is_some() {
                    return Err(ConfigError::Roster(format!("more than one endpoint for arm {:?}", arm.name)));
                }
                if ep.price_per_1k != arm.price_per_1k {
                    return Err(ConfigError::Roster(format!(
                        "arm {:?} is priced {} in config but {} in the model",
                        arm.name, ep.price_per_1k, arm.price_per_1k
                    )));
                }
                Ok(ep.clone())
            })
            .collect()
    }
}
