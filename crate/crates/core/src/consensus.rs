//! Round-robin proof-of-authority schedule.

use serde::{Deserialize, Serialize};

use crate::hash::{Address, TxId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("validator set is empty")]
    EmptyValidatorSet,
    #[error("validator {0} listed twice")]
    DuplicateValidator(Address),
    #[error("block interval must be positive")]
    ZeroInterval,
}

/// Validators in schedule order plus the slot length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidatorSet {
    validators: Vec<Address>,
    block_interval: u64,
}

impl ValidatorSet {
    pub fn new(validators: Vec<Address>, block_interval: u64) -> Result<Self, ConfigError> {
        if validators.is_empty() {
            return Err(ConfigError::EmptyValidatorSet);
        }
        if block_interval == 0 {
            return Err(ConfigError::ZeroInterval);
        }
        for (i, v) in validators.iter().enumerate() {
            if validators[..i].contains(v) {
                return Err(ConfigError::DuplicateValidator(*v));
            }
        }
        Ok(ValidatorSet {
            validators,
            block_interval,
        })
    }

    pub fn validators(&self) -> &[Address] {
        &self.validators
    }

    pub fn len(&self) -> usize {
        self.validators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.validators.is_empty()
    }

    pub fn block_interval(&self) -> u64 {
        self.block_interval
    }

    pub fn contains(&self, address: &Address) -> bool {
        self.validators.contains(address)
    }

    pub fn position(&self, address: &Address) -> Option<usize> {
        self.validators.iter().position(|v| v == address)
    }
}

pub fn proposer_for_slot(vset: &ValidatorSet, slot: u64) -> Address {
    vset.validators[(slot % vset.validators.len() as u64) as usize]
}

/// Slot containing unix time `now`, or `None` before genesis.
pub fn slot_at(genesis_time: u64, block_interval: u64, now: u64) -> Option<u64> {
    now.checked_sub(genesis_time).map(|d| d / block_interval)
}

pub fn slot_start(genesis_time: u64, block_interval: u64, slot: u64) -> u64 {
    genesis_time + slot * block_interval
}

/// Inverse of [`slot_start`]; `None` unless `timestamp` falls on a slot
/// boundary.
pub fn slot_of_timestamp(genesis_time: u64, block_interval: u64, timestamp: u64) -> Option<u64> {
    let d = timestamp.checked_sub(genesis_time)?;
    (d % block_interval == 0).then_some(d / block_interval)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confirmation {
    pub tx_id: TxId,
    pub inclusion_height: u64,
    pub confirmations: u64,
}

/// Depth of a block at `inclusion_height` under a tip at `tip_height`.
pub fn confirmation_depth(inclusion_height: u64, tip_height: u64) -> u64 {
    if tip_height < inclusion_height {
        0
    } else {
        tip_height - inclusion_height + 1
    }
}
