//! Genesis configuration and the initial world state.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::consensus::{ConfigError, ValidatorSet};
use crate::contracts::RegistryState;
use crate::crypto::{Keypair, PublicKey, Signature};
use crate::engine::{ContractInstance, ContractStorage, ExecParams, GasSchedule, WorldState};
use crate::hash::{sha256, Address, Hash32};
use crate::ledger::{Block, BlockHeader};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenesisValidator {
    pub address: Address,
    pub public_key: PublicKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenesisParticipant {
    pub name: String,
    pub public_key: PublicKey,
}

fn default_interval() -> u64 {
    13
}

fn default_max_payload() -> u64 {
    8 * 1024
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Genesis {
    pub chain_id: String,
    /// Unix seconds at which slot 0 starts.
    pub genesis_time: u64,
    #[serde(default = "default_interval")]
    pub block_interval_seconds: u64,
    pub validators: Vec<GenesisValidator>,
    /// Every identity allowed to sign transactions or connect as a peer.
    pub participants: Vec<GenesisParticipant>,
    #[serde(default)]
    pub gas_schedule: GasSchedule,
    #[serde(default = "default_max_payload")]
    pub max_payload_bytes: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum GenesisError {
    #[error("reading genesis file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing genesis file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("validator {0} address does not match its public key")]
    AddressMismatch(Address),
    #[error("gas schedule entry {0} must be positive")]
    ZeroGas(&'static str),
    #[error("block interval must be positive")]
    ZeroInterval,
}

impl Genesis {
    pub fn load(path: &Path) -> Result<Genesis, GenesisError> {
        let genesis: Genesis = serde_json::from_slice(&std::fs::read(path)?)?;
        genesis.check()?;
        Ok(genesis)
    }

    pub fn check(&self) -> Result<(), GenesisError> {
        for v in &self.validators {
            if v.public_key.address() != v.address {
                return Err(GenesisError::AddressMismatch(v.address));
            }
        }
        self.gas_schedule
            .validate()
            .map_err(GenesisError::ZeroGas)?;
        if self.block_interval_seconds == 0 {
            return Err(GenesisError::ZeroInterval);
        }
        self.validator_set()?;
        Ok(())
    }

    pub fn validator_set(&self) -> Result<ValidatorSet, ConfigError> {
        ValidatorSet::new(
            self.validators.iter().map(|v| v.address).collect(),
            self.block_interval_seconds,
        )
    }

    pub fn exec_params(&self) -> ExecParams {
        ExecParams {
            gas: self.gas_schedule,
            max_payload_bytes: self.max_payload_bytes,
        }
    }

    /// Address of the registry contract created at genesis.
    pub fn registry_address() -> Address {
        Address::for_contract(&Address::ZERO, 0)
    }

    /// Validators and participants as accounts, plus the registry.
    pub fn initial_state(&self) -> WorldState {
        let mut state = WorldState::new();
        for v in &self.validators {
            state.add_account(v.public_key);
        }
        for p in &self.participants {
            state.add_account(p.public_key);
        }
        state.insert_contract(ContractInstance {
            address: Self::registry_address(),
            seq: 0,
            storage: ContractStorage::Registry(RegistryState::default()),
        });
        state
    }

    /// Whether `key` belongs to a validator or participant.
    pub fn is_known(&self, key: &PublicKey) -> bool {
        self.validators.iter().any(|v| v.public_key == *key)
            || self.participants.iter().any(|p| p.public_key == *key)
    }

    pub fn public_key_of(&self, address: &Address) -> Option<PublicKey> {
        self.validators
            .iter()
            .map(|v| v.public_key)
            .chain(self.participants.iter().map(|p| p.public_key))
            .find(|k| k.address() == *address)
    }

    /// The unsigned block at height 0 committing to the initial state.
    pub fn block(&self) -> Block {
        Block {
            header: BlockHeader {
                height: 0,
                parent_hash: Hash32::ZERO,
                tx_root: Hash32::ZERO,
                state_root: self.initial_state().state_root(),
                event_root: Hash32::ZERO,
                timestamp: self.genesis_time,
                proposer: Address::ZERO,
            },
            proposer_signature: Signature::EMPTY,
            transactions: Vec::new(),
        }
    }
}

/// Key derived from a label. Only for local networks and tests.
pub fn dev_keypair(label: &str) -> Keypair {
    Keypair::from_seed(sha256(label.as_bytes()).0)
}

/// A local network whose keys are derived from labels.
pub struct DevNetwork {
    pub genesis: Genesis,
    pub validator_keys: Vec<Keypair>,
    pub participant_keys: Vec<Keypair>,
}

/// `validators` nodes labelled `node-0`, `node-1`, … plus extra
/// non-validator participants with the given labels.
pub fn dev_network(
    validators: usize,
    participants: &[&str],
    genesis_time: u64,
    block_interval_seconds: u64,
) -> DevNetwork {
    let validator_keys: Vec<Keypair> = (0..validators)
        .map(|i| dev_keypair(&format!("node-{i}")))
        .collect();
    let participant_keys: Vec<Keypair> = participants.iter().map(|l| dev_keypair(l)).collect();
    let genesis = Genesis {
        chain_id: "proml-dev".into(),
        genesis_time,
        block_interval_seconds,
        validators: validator_keys
            .iter()
            .map(|k| GenesisValidator {
                address: k.address(),
                public_key: k.public_key(),
            })
            .collect(),
        participants: participants
            .iter()
            .zip(&participant_keys)
            .map(|(l, k)| GenesisParticipant {
                name: (*l).to_string(),
                public_key: k.public_key(),
            })
            .collect(),
        gas_schedule: GasSchedule::default(),
        max_payload_bytes: default_max_payload(),
    };
    DevNetwork {
        genesis,
        validator_keys,
        participant_keys,
    }
}
