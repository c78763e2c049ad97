//! Writes everything a local multi-process network needs: a genesis
//! file plus a sealed key and a config per node.

use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use proml_core::engine::GasSchedule;
use proml_core::genesis::{GenesisParticipant, GenesisValidator};
use proml_core::{Genesis, Keypair};
use proml_node::config::{NodeConfig, PeerConfig};
use proml_node::{KeyFile, Role, WalletError};

#[derive(Debug, Clone)]
pub struct Layout {
    pub chain_id: String,
    pub validators: usize,
    /// Names of non-validating participants; each gets an observer node.
    pub participants: Vec<String>,
    pub genesis_time: u64,
    pub block_interval_seconds: u64,
    pub host: IpAddr,
    pub api_port: u16,
    pub p2p_port: u16,
}

#[derive(Debug, thiserror::Error)]
pub enum InitError {
    #[error("{0} already exists")]
    Exists(PathBuf),
    #[error("writing {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error(transparent)]
    Key(#[from] WalletError),
    #[error("need at least one validator")]
    NoValidators,
    #[error("participant name {0:?} is taken or empty")]
    BadName(String),
}

/// One node of the written network.
#[derive(Debug, Clone)]
pub struct NodeEntry {
    pub name: String,
    pub dir: PathBuf,
    pub role: Role,
    pub config: NodeConfig,
    pub address: proml_core::Address,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), InitError> {
    fs::write(path, bytes).map_err(|e| InitError::Io(path.to_path_buf(), e))
}

/// Creates `dir/genesis.json` and `dir/<name>/{key.json,config.json}`
/// for every node. Refuses to overwrite an existing genesis.
pub fn init_network(
    dir: &Path,
    layout: &Layout,
    passphrase: &str,
) -> Result<(Genesis, Vec<NodeEntry>), InitError> {
    if layout.validators == 0 {
        return Err(InitError::NoValidators);
    }
    let genesis_path = dir.join("genesis.json");
    if genesis_path.exists() {
        return Err(InitError::Exists(genesis_path));
    }
    let mut names: Vec<String> = (0..layout.validators)
        .map(|i| format!("node-{i}"))
        .collect();
    for p in &layout.participants {
        if p.is_empty() || names.contains(p) || p.contains(['/', '\\']) {
            return Err(InitError::BadName(p.clone()));
        }
        names.push(p.clone());
    }
    let keys: Vec<Keypair> = names.iter().map(|_| Keypair::generate()).collect();
    let genesis = Genesis {
        chain_id: layout.chain_id.clone(),
        genesis_time: layout.genesis_time,
        block_interval_seconds: layout.block_interval_seconds,
        validators: keys[..layout.validators]
            .iter()
            .map(|k| GenesisValidator {
                address: k.address(),
                public_key: k.public_key(),
            })
            .collect(),
        participants: names[layout.validators..]
            .iter()
            .zip(&keys[layout.validators..])
            .map(|(n, k)| GenesisParticipant {
                name: n.clone(),
                public_key: k.public_key(),
            })
            .collect(),
        gas_schedule: GasSchedule::default(),
        max_payload_bytes: 8 * 1024,
    };

    fs::create_dir_all(dir).map_err(|e| InitError::Io(dir.to_path_buf(), e))?;
    let p2p = |i: usize| SocketAddr::new(layout.host, layout.p2p_port + i as u16);
    let mut entries = Vec::new();
    for (i, (name, key)) in names.iter().zip(&keys).enumerate() {
        let node_dir = dir.join(name);
        fs::create_dir_all(&node_dir).map_err(|e| InitError::Io(node_dir.clone(), e))?;
        KeyFile::seal(key, passphrase)?.write(&node_dir.join("key.json"))?;
        let role = if i < layout.validators {
            Role::Validator
        } else {
            Role::Observer
        };
        // Everyone dials the validators that come before it, so each
        // pair is dialled once.
        let peers = (0..layout.validators.min(i))
            .map(|j| PeerConfig {
                addr: p2p(j).to_string(),
            })
            .collect();
        let config = NodeConfig {
            key_file: "key.json".into(),
            genesis_file: "../genesis.json".into(),
            api_listen: SocketAddr::new(layout.host, layout.api_port + i as u16),
            p2p_listen: p2p(i),
            peers,
            data_dir: "data".into(),
            role,
            replication_factor: 2,
            gas_limit: 10_000_000,
        };
        let json = serde_json::to_vec_pretty(&config).expect("config serializes");
        write(&node_dir.join("config.json"), &json)?;
        entries.push(NodeEntry {
            name: name.clone(),
            dir: node_dir,
            role,
            config,
            address: key.address(),
        });
    }
    let json = serde_json::to_vec_pretty(&genesis).expect("genesis serializes");
    write(&genesis_path, &json)?;
    Ok((genesis, entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn written_network_loads_back() {
        let dir = tempfile::tempdir().unwrap();
        let layout = Layout {
            chain_id: "t".into(),
            validators: 2,
            participants: vec!["data-admin".into()],
            genesis_time: 1_700_000_000,
            block_interval_seconds: 13,
            host: "127.0.0.1".parse().unwrap(),
            api_port: 18080,
            p2p_port: 19080,
        };
        let (genesis, nodes) = init_network(dir.path(), &layout, "pw").unwrap();
        assert_eq!(
            Genesis::load(&dir.path().join("genesis.json")).unwrap(),
            genesis
        );
        assert_eq!(nodes.len(), 3);
        let cfg = NodeConfig::load(&nodes[2].dir.join("config.json")).unwrap();
        assert_eq!(cfg.role, Role::Observer);
        assert_eq!(cfg.peers.len(), 2);
        assert_eq!(
            cfg.genesis_file,
            dir.path().join("data-admin/../genesis.json")
        );
        let key = KeyFile::read(&cfg.key_file).unwrap().open("pw").unwrap();
        assert_eq!(key.address(), nodes[2].address);
        assert!(matches!(
            init_network(dir.path(), &layout, "pw"),
            Err(InitError::Exists(_))
        ));
    }
}
