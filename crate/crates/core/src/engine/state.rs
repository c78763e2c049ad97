//! Replicated world state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codec::{Encode, Encoder};
use crate::contracts::{DatasetState, ModelState, RegistryState};
use crate::crypto::PublicKey;
use crate::hash::{sha256, Address, Hash32};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub address: Address,
    pub public_key: PublicKey,
    pub nonce: u64,
}

impl Encode for Account {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_address(&self.address)
            .put_bytes(&self.public_key.0)
            .put_u64(self.nonce);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractKind {
    Registry,
    Dataset,
    Model,
}

impl ContractKind {
    pub fn tag(self) -> u64 {
        match self {
            ContractKind::Registry => 0,
            ContractKind::Dataset => 1,
            ContractKind::Model => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContractStorage {
    Registry(RegistryState),
    Dataset(DatasetState),
    Model(ModelState),
}

impl ContractStorage {
    pub fn kind(&self) -> ContractKind {
        match self {
            ContractStorage::Registry(_) => ContractKind::Registry,
            ContractStorage::Dataset(_) => ContractKind::Dataset,
            ContractStorage::Model(_) => ContractKind::Model,
        }
    }
}

impl Encode for ContractStorage {
    fn encode(&self, enc: &mut Encoder) {
        match self {
            ContractStorage::Registry(s) => s.encode(enc),
            ContractStorage::Dataset(s) => s.encode(enc),
            ContractStorage::Model(s) => s.encode(enc),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractInstance {
    pub address: Address,
    /// Creation order across the whole chain.
    pub seq: u64,
    pub storage: ContractStorage,
}

impl ContractInstance {
    pub fn kind(&self) -> ContractKind {
        self.storage.kind()
    }
}

impl Encode for ContractInstance {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_address(&self.address)
            .put_u64(self.kind().tag())
            .put_u64(self.seq)
            .put_nested(&self.storage);
    }
}

/// Accounts and contract instances, kept sorted by address so the state
/// root is independent of insertion order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WorldState {
    accounts: BTreeMap<Address, Account>,
    contracts: BTreeMap<Address, ContractInstance>,
    next_contract_seq: u64,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_account(&mut self, public_key: PublicKey) -> Address {
        let address = public_key.address();
        self.accounts.entry(address).or_insert(Account {
            address,
            public_key,
            nonce: 0,
        });
        address
    }

    pub fn account(&self, address: &Address) -> Option<&Account> {
        self.accounts.get(address)
    }

    pub fn accounts(&self) -> impl Iterator<Item = &Account> {
        self.accounts.values()
    }

    /// Nonce the next transaction from `address` must carry.
    pub fn nonce_of(&self, address: &Address) -> u64 {
        self.accounts.get(address).map_or(0, |a| a.nonce)
    }

    pub(crate) fn bump_nonce(&mut self, address: &Address) {
        if let Some(acct) = self.accounts.get_mut(address) {
            acct.nonce += 1;
        }
    }

    pub fn contract(&self, address: &Address) -> Option<&ContractInstance> {
        self.contracts.get(address)
    }

    pub fn contracts(&self) -> impl Iterator<Item = &ContractInstance> {
        self.contracts.values()
    }

    pub fn next_contract_seq(&self) -> u64 {
        self.next_contract_seq
    }

    pub(crate) fn insert_contract(&mut self, instance: ContractInstance) {
        self.next_contract_seq = self.next_contract_seq.max(instance.seq + 1);
        self.contracts.insert(instance.address, instance);
    }

    pub fn registry(&self, address: &Address) -> Option<&RegistryState> {
        match &self.contracts.get(address)?.storage {
            ContractStorage::Registry(r) => Some(r),
            _ => None,
        }
    }

    pub fn dataset(&self, address: &Address) -> Option<&DatasetState> {
        match &self.contracts.get(address)?.storage {
            ContractStorage::Dataset(d) => Some(d),
            _ => None,
        }
    }

    pub fn model(&self, address: &Address) -> Option<&ModelState> {
        match &self.contracts.get(address)?.storage {
            ContractStorage::Model(m) => Some(m),
            _ => None,
        }
    }

    /// SHA-256 of the canonical encoding of the full state.
    pub fn state_root(&self) -> Hash32 {
        sha256(&self.encode_to_vec())
    }
}

impl Encode for WorldState {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_u64(self.accounts.len() as u64);
        for account in self.accounts.values() {
            enc.put_nested(account);
        }
        enc.put_u64(self.contracts.len() as u64);
        for contract in self.contracts.values() {
            enc.put_nested(contract);
        }
        enc.put_u64(self.next_contract_seq);
    }
}
