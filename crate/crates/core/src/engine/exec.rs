use std::collections::BTreeMap;

use crate::codec::Encode;
use crate::contracts::{
    dataset, methods, model, registry, CallEnv, DatasetState, Effects, RegistryState,
};
use crate::engine::gas::{charge_gas, GasSchedule, OpKind};
use crate::engine::receipt::{Event, ExecStatus, Receipt, RevertReason};
use crate::engine::state::{ContractInstance, ContractStorage, WorldState};
use crate::hash::{Address, Hash32};
use crate::ledger::tx::{intrinsic_gas, verify_transaction, Transaction, TxRejection};
use crate::merkle::merkle_root;

/// Chain-wide execution parameters fixed at genesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecParams {
    pub gas: GasSchedule,
    pub max_payload_bytes: u64,
}

impl Default for ExecParams {
    fn default() -> Self {
        ExecParams {
            gas: GasSchedule::default(),
            max_payload_bytes: 8 * 1024,
        }
    }
}

/// Block fields visible to contract code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockContext {
    pub height: u64,
    pub timestamp: u64,
}

/// Copy-on-write view over the world state for one call. Dropping it
/// discards every change.
pub struct Scratch<'a> {
    base: &'a WorldState,
    touched: BTreeMap<Address, ContractInstance>,
    next_seq: u64,
}

impl<'a> Scratch<'a> {
    fn new(base: &'a WorldState) -> Self {
        Scratch {
            base,
            touched: BTreeMap::new(),
            next_seq: base.next_contract_seq(),
        }
    }

    pub fn contract(&self, address: &Address) -> Option<&ContractInstance> {
        self.touched
            .get(address)
            .or_else(|| self.base.contract(address))
    }

    pub fn dataset(&self, address: &Address) -> Option<&DatasetState> {
        match &self.contract(address)?.storage {
            ContractStorage::Dataset(d) => Some(d),
            _ => None,
        }
    }

    pub fn storage_mut(&mut self, address: &Address) -> Option<&mut ContractStorage> {
        if !self.touched.contains_key(address) {
            let original = self.base.contract(address)?.clone();
            self.touched.insert(*address, original);
        }
        self.touched.get_mut(address).map(|c| &mut c.storage)
    }

    fn into_changes(self) -> impl Iterator<Item = ContractInstance> {
        self.touched.into_values()
    }
}

/// Address of the contract a call from `env` would create.
pub fn contract_address(env: &CallEnv) -> Address {
    Address::for_contract(&env.sender, env.nonce)
}

/// Creates a contract instance at the address derived from the calling
/// transaction. The only path through which contracts come to exist.
pub fn deploy_contract(
    scratch: &mut Scratch<'_>,
    env: &CallEnv,
    storage: ContractStorage,
    fx: &mut Effects,
) -> Result<Address, RevertReason> {
    let address = contract_address(env);
    if scratch.contract(&address).is_some() {
        return Err(RevertReason::AddressCollision);
    }
    fx.bytes_written += storage.encoded_len() as u64;
    fx.new_contract = Some(address);
    fx.deployment = true;
    let seq = scratch.next_seq;
    scratch.next_seq += 1;
    scratch.touched.insert(
        address,
        ContractInstance {
            address,
            seq,
            storage,
        },
    );
    Ok(address)
}

fn dispatch(
    scratch: &mut Scratch<'_>,
    tx: &Transaction,
    env: &CallEnv,
    fx: &mut Effects,
) -> Result<(), RevertReason> {
    let call = &tx.body.call;
    let Some(target) = tx.body.target else {
        if call.method != methods::DEPLOY_REGISTRY || !call.args.is_empty() {
            return Err(RevertReason::BadInit);
        }
        deploy_contract(
            scratch,
            env,
            ContractStorage::Registry(RegistryState::default()),
            fx,
        )?;
        return Ok(());
    };
    let kind = scratch
        .contract(&target)
        .ok_or(RevertReason::NoSuchContract)?
        .kind();
    use crate::engine::ContractKind;
    match kind {
        ContractKind::Registry => {
            registry::call(scratch, target, env, &call.method, &call.args, fx)
        }
        ContractKind::Dataset => {
            let Some(ContractStorage::Dataset(mut state)) = scratch.storage_mut(&target).cloned()
            else {
                unreachable!("kind checked above")
            };
            dataset::call(&mut state, target, env, &call.method, &call.args, fx)?;
            *scratch.storage_mut(&target).expect("present") = ContractStorage::Dataset(state);
            Ok(())
        }
        ContractKind::Model => {
            let Some(ContractStorage::Model(mut state)) = scratch.storage_mut(&target).cloned()
            else {
                unreachable!("kind checked above")
            };
            model::call(&mut state, target, env, &call.method, &call.args, fx)?;
            *scratch.storage_mut(&target).expect("present") = ContractStorage::Model(state);
            Ok(())
        }
    }
}

/// Validates and executes `tx` against `state` in place.
///
/// A rejected transaction leaves `state` untouched. An accepted one always
/// bumps the sender nonce; its contract effects apply only on success.
pub fn apply_transaction(
    state: &mut WorldState,
    tx: &Transaction,
    block: &BlockContext,
    params: &ExecParams,
) -> Result<Receipt, TxRejection> {
    verify_transaction(tx, state, &params.gas)?;
    let tx_id = tx.tx_id();
    let env = CallEnv {
        sender: tx.body.sender,
        nonce: tx.body.nonce,
        tx_id,
        block_height: block.height,
        timestamp: block.timestamp,
        max_payload_bytes: params.max_payload_bytes,
    };
    let mut fx = Effects::default();
    let mut scratch = Scratch::new(state);
    let outcome = dispatch(&mut scratch, tx, &env, &mut fx).and_then(|()| {
        let op = if fx.deployment {
            OpKind::Deployment
        } else {
            OpKind::Call
        };
        let event_lens: Vec<u64> = fx
            .events
            .iter()
            .map(|(_, e)| e.encode_payload().len() as u64)
            .collect();
        let gas = charge_gas(
            &params.gas,
            op,
            tx.body.call.payload_len(),
            fx.bytes_written,
            &event_lens,
        );
        if gas > tx.body.gas_limit {
            Err(RevertReason::OutOfGas)
        } else {
            Ok(gas)
        }
    });
    let receipt = match outcome {
        Ok(gas_used) => {
            let changes: Vec<_> = scratch.into_changes().collect();
            for instance in changes {
                state.insert_contract(instance);
            }
            let events = fx
                .events
                .iter()
                .map(|(emitter, e)| Event {
                    emitter: *emitter,
                    name: e.name().to_string(),
                    payload: e.encode_payload(),
                    block_height: block.height,
                    tx_id,
                })
                .collect();
            Receipt {
                tx_id,
                status: ExecStatus::Success,
                gas_used,
                events,
                new_contract: fx.new_contract,
            }
        }
        Err(reason) => {
            drop(scratch);
            let gas_used = match reason {
                RevertReason::OutOfGas => tx.body.gas_limit,
                _ => intrinsic_gas(&tx.body, &params.gas),
            };
            Receipt {
                tx_id,
                status: ExecStatus::Reverted(reason),
                gas_used,
                events: Vec::new(),
                new_contract: None,
            }
        }
    };
    state.bump_nonce(&tx.body.sender);
    Ok(receipt)
}

/// Result of executing a block body.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub state: WorldState,
    pub receipts: Vec<Receipt>,
    pub state_root: Hash32,
    pub event_root: Hash32,
}

/// Executes `txs` in order on a copy of `state`. Fails on the first
/// transaction that does not pass validation, reporting its index.
pub fn execute_transactions(
    state: &WorldState,
    txs: &[Transaction],
    block: &BlockContext,
    params: &ExecParams,
) -> Result<Execution, (usize, TxRejection)> {
    let mut next = state.clone();
    let mut receipts = Vec::with_capacity(txs.len());
    for (i, tx) in txs.iter().enumerate() {
        receipts.push(apply_transaction(&mut next, tx, block, params).map_err(|e| (i, e))?);
    }
    let event_root = event_root(&receipts);
    Ok(Execution {
        state_root: next.state_root(),
        state: next,
        receipts,
        event_root,
    })
}

/// Merkle root over every event of every receipt, in order.
pub fn event_root(receipts: &[Receipt]) -> Hash32 {
    let leaves: Vec<Hash32> = receipts
        .iter()
        .flat_map(|r| r.events.iter().map(Event::leaf_hash))
        .collect();
    merkle_root(&leaves)
}
