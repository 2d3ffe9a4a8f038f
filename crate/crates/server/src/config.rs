use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use crowdtrace_core::service::ServiceConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("ConfigInvalid: {0}")]
    Invalid(String),
    #[error("Io: {path}: {reason}")]
    Io { path: PathBuf, reason: String },
}

/// The `serve` config file (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    /// Holds `events.log` and `state.digest`.
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    /// Pipe-delimited vehicle records; none when absent.
    #[serde(default)]
    pub vehicles: Option<PathBuf>,
    /// Bearer token for `/api/v1/operator/...`; open when absent.
    #[serde(default)]
    pub operator_token: Option<String>,
    #[serde(default)]
    pub service: ServiceConfig,
}

fn default_listen() -> SocketAddr {
    ([127, 0, 0, 1], 8080).into()
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            listen: default_listen(),
            data_dir: default_data_dir(),
            vehicles: None,
            operator_token: None,
            service: ServiceConfig::default(),
        }
    }
}

impl ServerConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.message().to_owned()))?;
        cfg.service
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    /// Loads a config file. Relative paths inside it resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_owned(),
            reason: e.to_string(),
        })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data_dir = base.join(&cfg.data_dir);
        cfg.vehicles = cfg.vehicles.map(|v| base.join(v));
        Ok(cfg)
    }
}
