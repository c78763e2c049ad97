#![allow(dead_code)]

use proml_core::chain::{Chain, Proposal};
use proml_core::contracts::{
    calls, ActivityPayload, AssetMetadata, NamedValue, Value, WorkflowActivity,
};
use proml_core::engine::Receipt;
use proml_core::genesis::{dev_network, DevNetwork, Genesis};
use proml_core::ledger::{sign_call, Call, Transaction};
use proml_core::{Address, Keypair};

pub const GAS: u64 = 5_000_000;
pub const GENESIS_TIME: u64 = 1_700_000_000;

/// A chain driven by hand: every call to `produce` seals the next slot.
pub struct Harness {
    pub net: DevNetwork,
    pub chain: Chain,
    pub slot: u64,
    nonces: Vec<(Address, u64)>,
}

impl Harness {
    pub fn new(validators: usize) -> Self {
        Self::with_participants(validators, &["alice", "mallory"])
    }

    pub fn with_participants(validators: usize, participants: &[&str]) -> Self {
        let net = dev_network(validators, participants, GENESIS_TIME, 13);
        let chain = Chain::new(net.genesis.clone()).unwrap();
        Harness {
            net,
            chain,
            slot: 0,
            nonces: Vec::new(),
        }
    }

    pub fn genesis(&self) -> &Genesis {
        &self.net.genesis
    }

    pub fn key(&self, i: usize) -> &Keypair {
        &self.net.validator_keys[i]
    }

    pub fn participant(&self, i: usize) -> &Keypair {
        &self.net.participant_keys[i]
    }

    pub fn registry(&self) -> Address {
        self.chain.registry_address()
    }

    /// Signs `call` with the next nonce this harness has handed out for `key`.
    pub fn tx(&mut self, key: &Keypair, target: Option<Address>, call: Call) -> Transaction {
        let addr = key.address();
        let nonce = match self.nonces.iter_mut().find(|(a, _)| *a == addr) {
            Some((_, n)) => {
                *n += 1;
                *n - 1
            }
            None => {
                let n = self.chain.state().nonce_of(&addr);
                self.nonces.push((addr, n + 1));
                n
            }
        };
        sign_call(key, nonce, target, call, GAS)
    }

    pub fn propose(&mut self, pending: &[Transaction]) -> Proposal {
        self.slot += 1;
        let vset = self.genesis().validator_set().unwrap();
        let proposer = proml_core::consensus::proposer_for_slot(&vset, self.slot);
        let key = self
            .net
            .validator_keys
            .iter()
            .find(|k| k.address() == proposer)
            .unwrap();
        self.chain.propose(pending, self.slot, key).unwrap()
    }

    /// Proposes and accepts one block, returning its receipts.
    pub fn produce(&mut self, pending: &[Transaction]) -> Vec<Receipt> {
        let proposal = self.propose(pending);
        self.chain.accept_block(proposal.block).unwrap().to_vec()
    }

    pub fn one(&mut self, tx: Transaction) -> Receipt {
        let mut r = self.produce(&[tx]);
        assert_eq!(r.len(), 1, "transaction was not included");
        r.remove(0)
    }
}

pub fn meta(name: &str) -> AssetMetadata {
    AssetMetadata {
        name: name.into(),
        version: "1".into(),
        description: String::new(),
    }
}

pub fn register_dataset(name: &str, ancestor: Option<Address>) -> Call {
    calls::register_dataset(meta(name), ancestor, None)
}

pub fn register_model(name: &str) -> Call {
    calls::register_model(meta(name))
}

pub fn activity(activity: WorkflowActivity, input: Option<Address>) -> Call {
    let mut payload = ActivityPayload::default();
    if let Some(a) = input {
        payload
            .inputs
            .push(NamedValue::new("dataset", Value::Address(a)));
    }
    payload
        .params
        .push(NamedValue::new("step", Value::Text(activity.to_string())));
    calls::record(activity, &payload)
}
