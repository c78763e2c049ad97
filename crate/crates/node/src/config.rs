//! Node configuration file.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Validator,
    Observer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeerConfig {
    /// Host and port of the peer's P2P listener.
    pub addr: String,
}

/// JSON config read by `promld --config`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub key_file: PathBuf,
    pub genesis_file: PathBuf,
    pub api_listen: SocketAddr,
    pub p2p_listen: SocketAddr,
    #[serde(default)]
    pub peers: Vec<PeerConfig>,
    pub data_dir: PathBuf,
    pub role: Role,
    #[serde(default = "default_replication")]
    pub replication_factor: usize,
    #[serde(default = "default_gas_limit")]
    pub gas_limit: u64,
}

fn default_replication() -> usize {
    2
}

fn default_gas_limit() -> u64 {
    10_000_000
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

impl NodeConfig {
    /// Loads the file; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<NodeConfig, ConfigError> {
        let text = std::fs::read(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        let mut cfg: NodeConfig =
            serde_json::from_slice(&text).map_err(|source| ConfigError::Json {
                path: path.into(),
                source,
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.key_file, &mut cfg.genesis_file, &mut cfg.data_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}
