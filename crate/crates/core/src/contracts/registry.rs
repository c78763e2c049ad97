use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codec::{Decode, Encode, Encoder};
use crate::contracts::dataset::DatasetState;
use crate::contracts::events::ProvenanceEvent;
use crate::contracts::model::ModelState;
use crate::contracts::payload::{RegisterDatasetArgs, RegisterModelArgs};
use crate::contracts::{methods, CallEnv, Effects};
use crate::engine::exec::{contract_address, deploy_contract, Scratch};
use crate::engine::{ContractKind, ContractStorage, RevertReason};
use crate::hash::Address;

/// Factory and index of every dataset and model, in registration order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegistryState {
    pub dataset_addresses: Vec<Address>,
    pub model_addresses: Vec<Address>,
    pub by_participant: BTreeMap<Address, Vec<Address>>,
}

impl RegistryState {
    pub fn contains(&self, asset: &Address) -> bool {
        self.dataset_addresses.contains(asset) || self.model_addresses.contains(asset)
    }

    /// Assets registered by `participant`, in registration order.
    pub fn registered_by(&self, participant: &Address) -> &[Address] {
        self.by_participant
            .get(participant)
            .map_or(&[], Vec::as_slice)
    }

    /// Datasets first, then models.
    pub fn assets(&self) -> impl Iterator<Item = &Address> {
        self.dataset_addresses.iter().chain(&self.model_addresses)
    }

    fn insert(&mut self, kind: ContractKind, asset: Address, owner: Address) {
        match kind {
            ContractKind::Dataset => self.dataset_addresses.push(asset),
            _ => self.model_addresses.push(asset),
        }
        self.by_participant.entry(owner).or_default().push(asset);
    }
}

impl Encode for RegistryState {
    fn encode(&self, enc: &mut Encoder) {
        enc.put_list(&self.dataset_addresses)
            .put_list(&self.model_addresses)
            .put_u64(self.by_participant.len() as u64);
        for (participant, assets) in &self.by_participant {
            enc.put_address(participant).put_list(assets);
        }
    }
}

pub(crate) fn call(
    scratch: &mut Scratch<'_>,
    me: Address,
    env: &CallEnv,
    method: &str,
    args: &[u8],
    fx: &mut Effects,
) -> Result<(), RevertReason> {
    match method {
        methods::REGISTER_DATASET | methods::REGISTER_MODEL => {}
        _ => return Err(RevertReason::NoSuchMethod),
    }
    if args.len() as u64 > env.max_payload_bytes {
        return Err(RevertReason::PayloadTooLarge);
    }
    let asset = contract_address(env);
    let (storage, event) = if method == methods::REGISTER_DATASET {
        let args = RegisterDatasetArgs::decode_exact(args).map_err(|_| RevertReason::BadInit)?;
        if args.metadata.name.is_empty() {
            return Err(RevertReason::BadInit);
        }
        if let Some(ancestor) = args.ancestor {
            if scratch.dataset(&ancestor).is_none() {
                return Err(RevertReason::UnknownAncestor);
            }
        }
        if args.anchor.is_some_and(|a| a.is_zero()) {
            return Err(RevertReason::BadAnchor);
        }
        let state = DatasetState::new(asset, me, env, args.metadata, args.ancestor, args.anchor);
        let event = ProvenanceEvent::DatasetRegistered {
            dataset: asset,
            owner: env.sender,
            ancestor: args.ancestor,
            anchor: args.anchor,
        };
        (ContractStorage::Dataset(state), event)
    } else {
        let args = RegisterModelArgs::decode_exact(args).map_err(|_| RevertReason::BadInit)?;
        if args.metadata.name.is_empty() {
            return Err(RevertReason::BadInit);
        }
        let state = ModelState::new(env.sender, me, args.metadata);
        let event = ProvenanceEvent::ModelRegistered {
            model: asset,
            owner: env.sender,
        };
        (ContractStorage::Model(state), event)
    };
    let kind = storage.kind();
    deploy_contract(scratch, env, storage, fx)?;
    match scratch.storage_mut(&me) {
        Some(ContractStorage::Registry(registry)) => registry.insert(kind, asset, env.sender),
        _ => return Err(RevertReason::NoSuchContract),
    }
    // One list slot plus one participant-index slot.
    fx.bytes_written += 2 * asset.encoded_len() as u64;
    fx.emit(me, event);
    Ok(())
}
