//! Randomized checks of the ledger, engine and contract invariants.

mod common;

use common::*;
use proml_core::chain::Chain;
use proml_core::codec::{Decode, Encode};
use proml_core::consensus::proposer_for_slot;
use proml_core::contracts::{
    calls, fold_stage, ActivityPayload, DatasetWorkflow, LinearModelWorkflow, NamedValue,
    ProvenanceRecord, Value, WorkflowActivity,
};
use proml_core::engine::{ContractStorage, ExecStatus, GasSchedule, Receipt, RevertReason};
use proml_core::ledger::{intrinsic_gas, validate_chain, Block, Call, Ledger, Transaction};
use proml_core::merkle::{merkle_proof, verify_merkle_proof};
use proml_core::offchain::{BlobStore, ContentId};
use proml_core::{Address, Keypair};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Dataset {
        who: u8,
        ancestor: Option<u8>,
        empty: bool,
    },
    Model {
        who: u8,
    },
    Record {
        who: u8,
        model: u8,
        activity: u8,
        big: bool,
    },
    Publish {
        who: u8,
        asset: u8,
        zero: bool,
    },
    Junk {
        who: u8,
    },
    Seal,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        1 => (0u8..3, proptest::option::of(0u8..8), prop::bool::weighted(0.1))
            .prop_map(|(who, ancestor, empty)| Op::Dataset { who, ancestor, empty }),
        1 => (0u8..3).prop_map(|who| Op::Model { who }),
        4 => (0u8..3, 0u8..8, 0u8..7, prop::bool::weighted(0.05))
            .prop_map(|(who, model, activity, big)| Op::Record { who, model, activity, big }),
        1 => (0u8..3, 0u8..8, prop::bool::weighted(0.2))
            .prop_map(|(who, asset, zero)| Op::Publish { who, asset, zero }),
        1 => (0u8..3).prop_map(|who| Op::Junk { who }),
        2 => Just(Op::Seal),
    ]
}

struct Run {
    h: Harness,
    /// Every transaction in inclusion order with its receipt.
    included: Vec<(Transaction, Receipt)>,
    /// State snapshot after each block.
    snapshots: Vec<proml_core::engine::WorldState>,
}

fn sender(h: &Harness, who: u8) -> Keypair {
    match who {
        0 => h.key(0).clone(),
        1 => h.key(1).clone(),
        _ => h.participant(0).clone(),
    }
}

/// Executes `ops` on a fresh 2-validator chain. Addresses of assets are
/// predicted from (sender, nonce) so later ops can refer to them even
/// within the same block.
fn run(ops: &[Op]) -> Run {
    let mut h = Harness::new(2);
    let reg = h.registry();
    let mut datasets: Vec<Address> = Vec::new();
    let mut models: Vec<Address> = Vec::new();
    let mut pending: Vec<Transaction> = Vec::new();
    let mut included = Vec::new();
    let mut snapshots = vec![h.chain.state().clone()];
    let pick = |v: &[Address], i: u8| (!v.is_empty()).then(|| v[i as usize % v.len()]);
    let mut flush = |h: &mut Harness, pending: &mut Vec<Transaction>| {
        let receipts = h.produce(pending);
        assert_eq!(receipts.len(), pending.len());
        included.extend(pending.drain(..).zip(receipts));
        snapshots.push(h.chain.state().clone());
    };
    for op in ops {
        match op {
            Op::Seal => {
                flush(&mut h, &mut pending);
                continue;
            }
            Op::Dataset {
                who,
                ancestor,
                empty,
            } => {
                let key = sender(&h, *who);
                let anc = ancestor.and_then(|i| pick(&datasets, i));
                let name = if *empty { "" } else { "d" };
                let tx = h.tx(&key, Some(reg), register_dataset(name, anc));
                datasets.push(Address::for_contract(&key.address(), tx.nonce()));
                pending.push(tx);
            }
            Op::Model { who } => {
                let key = sender(&h, *who);
                let tx = h.tx(&key, Some(reg), register_model("m"));
                models.push(Address::for_contract(&key.address(), tx.nonce()));
                pending.push(tx);
            }
            Op::Record {
                who,
                model,
                activity: a,
                big,
            } => {
                let Some(m) = pick(&models, *model) else {
                    continue;
                };
                let key = sender(&h, *who);
                let mut payload = ActivityPayload::default();
                payload
                    .params
                    .push(NamedValue::new("by", Value::Address(Address([0xee; 20]))));
                if *big {
                    payload
                        .params
                        .push(NamedValue::new("x", Value::Text("y".repeat(9000))));
                }
                let act = WorkflowActivity::MODEL_ACTIVITIES[*a as usize];
                pending.push(h.tx(&key, Some(m), calls::record(act, &payload)));
            }
            Op::Publish { who, asset, zero } => {
                let all: Vec<Address> = datasets.iter().chain(&models).copied().collect();
                let Some(target) = pick(&all, *asset) else {
                    continue;
                };
                let key = sender(&h, *who);
                let anchor = if *zero {
                    ContentId {
                        hash: proml_core::Hash32::ZERO,
                        size: 3,
                    }
                } else {
                    ContentId::of(&[*asset; 3])
                };
                pending.push(h.tx(&key, Some(target), calls::publish(anchor)));
            }
            Op::Junk { who } => {
                let key = sender(&h, *who);
                pending.push(h.tx(&key, Some(reg), Call::new("nope", vec![1, 2, 3])));
            }
        }
    }
    flush(&mut h, &mut pending);
    Run {
        h,
        included,
        snapshots,
    }
}

fn histories(state: &proml_core::engine::WorldState) -> Vec<(Address, Vec<ProvenanceRecord>)> {
    state
        .contracts()
        .filter_map(|c| match &c.storage {
            ContractStorage::Dataset(d) => Some((c.address, d.history.clone())),
            ContractStorage::Model(m) => Some((c.address, m.history.clone())),
            ContractStorage::Registry(_) => None,
        })
        .collect()
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn replay_is_deterministic(ops in prop::collection::vec(op(), 1..30)) {
        let r = run(&ops);
        let a = Chain::from_ledger(r.h.genesis().clone(), r.h.chain.ledger().clone()).unwrap();
        let b = Chain::from_ledger(r.h.genesis().clone(), r.h.chain.ledger().clone()).unwrap();
        prop_assert_eq!(a.state().state_root(), b.state().state_root());
        prop_assert_eq!(a.state().state_root(), r.h.chain.state_root());
    }

    #[test]
    fn single_bit_flip_is_detected(
        ops in prop::collection::vec(op(), 1..20),
        pick in any::<prop::sample::Index>(),
        bit in 0u8..8,
        target in 0u8..2,
    ) {
        let r = run(&ops);
        let ledger = r.h.chain.ledger();
        // Flip one bit of the stored bytes of one block or one receipt list.
        let height = 1 + pick.index(ledger.height() as usize) as u64;
        let mut blocks = ledger.blocks().to_vec();
        let mut receipts = ledger.all_receipts().to_vec();
        let h = height as usize;
        if target == 0 || receipts[h].is_empty() {
            let mut bytes = blocks[h].encode_to_vec();
            let i = pick.index(bytes.len());
            bytes[i] ^= 1 << bit;
            match Block::decode_exact(&bytes) {
                Err(_) => return Ok(()),
                Ok(b) => blocks[h] = b,
            }
        } else {
            let mut enc = proml_core::codec::Encoder::new();
            enc.put_list(&receipts[h]);
            let mut bytes = enc.finish();
            let i = pick.index(bytes.len());
            bytes[i] ^= 1 << bit;
            let mut dec = proml_core::codec::Decoder::new(&bytes);
            match dec.get_list::<Receipt>().and_then(|l| dec.finish().map(|_| l)) {
                Err(_) => return Ok(()),
                Ok(l) => receipts[h] = l,
            }
        }
        let tampered = Ledger::from_parts(blocks, receipts);
        prop_assert!(validate_chain(r.h.genesis(), &tampered).is_err());
    }

    #[test]
    fn included_transactions_verify_and_nonces_are_gapless(ops in prop::collection::vec(op(), 1..30)) {
        let r = run(&ops);
        let genesis = r.h.genesis();
        let mut next: Vec<(Address, u64)> = Vec::new();
        for block in r.h.chain.ledger().blocks() {
            for tx in &block.transactions {
                let key = genesis.public_key_of(&tx.sender()).unwrap();
                prop_assert!(key.verify(&tx.signing_bytes(), &tx.signature));
                prop_assert_eq!(key.address(), tx.sender());
                match next.iter_mut().find(|(a, _)| *a == tx.sender()) {
                    Some((_, n)) => { prop_assert_eq!(tx.nonce(), *n); *n += 1; }
                    None => { prop_assert_eq!(tx.nonce(), 0); next.push((tx.sender(), 1)); }
                }
            }
        }
    }

    #[test]
    fn reverts_touch_only_the_nonce(ops in prop::collection::vec(op(), 1..30)) {
        let r = run(&ops);
        let schedule = GasSchedule::default();
        for (tx, receipt) in &r.included {
            prop_assert!(receipt.gas_used <= tx.body.gas_limit);
            if let ExecStatus::Reverted(reason) = receipt.status {
                prop_assert!(receipt.events.is_empty());
                prop_assert_eq!(receipt.new_contract, None);
                if reason != RevertReason::OutOfGas {
                    prop_assert_eq!(receipt.gas_used, intrinsic_gas(&tx.body, &schedule));
                }
            }
        }
        // Re-executing each reverted tx alone against the pre-state changes
        // nothing but the nonce.
        let mut state = r.h.genesis().initial_state();
        let params = r.h.genesis().exec_params();
        for block in r.h.chain.ledger().blocks().iter().skip(1) {
            let ctx = proml_core::engine::BlockContext {
                height: block.height(),
                timestamp: block.header.timestamp,
            };
            for tx in &block.transactions {
                let before = state.clone();
                let receipt = proml_core::engine::apply_transaction(&mut state, tx, &ctx, &params).unwrap();
                if !receipt.status.is_success() {
                    for acct in before.accounts() {
                        let now = state.account(&acct.address).unwrap();
                        let bump = u64::from(acct.address == tx.sender());
                        prop_assert_eq!(now.nonce, acct.nonce + bump);
                    }
                    prop_assert_eq!(state.accounts().count(), before.accounts().count());
                    prop_assert_eq!(state.next_contract_seq(), before.next_contract_seq());
                    prop_assert_eq!(
                        state.contracts().collect::<Vec<_>>(),
                        before.contracts().collect::<Vec<_>>()
                    );
                    prop_assert_eq!(state.nonce_of(&tx.sender()), before.nonce_of(&tx.sender()) + 1);
                }
            }
        }
    }

    #[test]
    fn every_event_is_provable(ops in prop::collection::vec(op(), 1..30)) {
        let r = run(&ops);
        let ledger = r.h.chain.ledger();
        for height in 0..=ledger.height() {
            let leaves: Vec<_> = ledger.receipts(height).unwrap().iter()
                .flat_map(|r| r.events.iter().map(|e| e.leaf_hash()))
                .collect();
            let root = ledger.block(height).unwrap().header.event_root;
            for (i, leaf) in leaves.iter().enumerate() {
                let proof = merkle_proof(&leaves, i).unwrap();
                prop_assert!(verify_merkle_proof(&root, leaf, &proof));
            }
        }
    }

    #[test]
    fn histories_are_append_only(ops in prop::collection::vec(op(), 1..40)) {
        let r = run(&ops);
        for pair in r.snapshots.windows(2) {
            let later = histories(&pair[1]);
            for (addr, earlier) in histories(&pair[0]) {
                let (_, now) = later.iter().find(|(a, _)| *a == addr).unwrap();
                prop_assert!(now.len() >= earlier.len());
                prop_assert_eq!(&now[..earlier.len()], &earlier[..]);
            }
        }
    }

    #[test]
    fn stage_is_the_fold_of_history(ops in prop::collection::vec(op(), 1..40)) {
        let r = run(&ops);
        for c in r.h.chain.state().contracts() {
            match &c.storage {
                ContractStorage::Model(m) => prop_assert_eq!(m.stage, fold_stage(&LinearModelWorkflow, &m.history)),
                ContractStorage::Dataset(d) => prop_assert_eq!(d.stage, fold_stage(&DatasetWorkflow, &d.history)),
                ContractStorage::Registry(_) => {}
            }
        }
    }

    #[test]
    fn records_name_the_signing_sender(ops in prop::collection::vec(op(), 1..40)) {
        let r = run(&ops);
        for (_, history) in histories(r.h.chain.state()) {
            for record in history {
                let tx = r.h.chain.transaction(&record.tx_id).unwrap();
                prop_assert_eq!(record.participant, tx.sender());
                prop_assert_ne!(record.participant, Address([0xee; 20]));
            }
        }
    }

    #[test]
    fn registry_reaches_every_asset(ops in prop::collection::vec(op(), 1..40)) {
        let r = run(&ops);
        let state = r.h.chain.state();
        let registry = state.registry(&r.h.registry()).unwrap();
        let assets: Vec<Address> = state.contracts()
            .filter(|c| !matches!(c.storage, ContractStorage::Registry(_)))
            .map(|c| c.address)
            .collect();
        for a in &assets {
            let in_lists = registry.dataset_addresses.iter().chain(&registry.model_addresses)
                .filter(|x| *x == a).count();
            prop_assert_eq!(in_lists, 1);
            let owner = state.dataset(a).map(|d| d.owner).or(state.model(a).map(|m| m.owner)).unwrap();
            prop_assert!(registry.registered_by(&owner).contains(a));
        }
        for a in registry.assets() {
            prop_assert!(assets.contains(a));
        }
    }

    #[test]
    fn confirmations_never_decrease(extra in 1usize..6) {
        let mut h = Harness::new(2);
        let key = h.key(0).clone();
        let reg = h.registry();
        let tx = h.tx(&key, Some(reg), register_model("m"));
        let id = tx.tx_id();
        h.one(tx);
        let mut last = h.chain.confirmations_of(&id);
        for _ in 0..extra {
            h.produce(&[]);
            let now = h.chain.confirmations_of(&id);
            prop_assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn competing_block_at_same_height_never_accepted(skip in 1u64..4) {
        let mut h = Harness::new(3);
        let first = h.propose(&[]);
        // Another validator's block for a later slot on the same parent.
        let slot = h.slot + skip;
        let vset = h.genesis().validator_set().unwrap();
        let owner = proposer_for_slot(&vset, slot);
        let key = h.net.validator_keys.iter().find(|k| k.address() == owner).unwrap().clone();
        let rival = h.chain.propose(&[], slot, &key).unwrap();
        h.chain.accept_block(first.block).unwrap();
        prop_assert!(h.chain.accept_block(rival.block).is_err());
        prop_assert_eq!(h.chain.height(), 1);
    }

    #[test]
    fn blobs_round_trip(blob in prop::collection::vec(any::<u8>(), 1..4096)) {
        let dir = tempfile::tempdir().unwrap();
        let store = BlobStore::open(dir.path()).unwrap();
        let id = store.put(&blob).unwrap();
        prop_assert_eq!(id, ContentId::of(&blob));
        prop_assert_eq!(store.get(&id).unwrap(), blob);
    }

    #[test]
    fn corrupted_blob_never_returned(blob in prop::collection::vec(any::<u8>(), 1..512), at in any::<prop::sample::Index>(), bit in 0u8..8) {
        let dir = tempfile::tempdir().unwrap();
        let store = BlobStore::open(dir.path()).unwrap();
        let id = store.put(&blob).unwrap();
        let mut bad = blob.clone();
        let i = at.index(bad.len());
        bad[i] ^= 1 << bit;
        std::fs::write(dir.path().join("content").join(id.file_name()), &bad).unwrap();
        prop_assert!(store.get(&id).is_err());
    }

    #[test]
    fn transactions_round_trip(method in "[a-z_]{0,20}", args in prop::collection::vec(any::<u8>(), 0..200), nonce in any::<u64>(), target in proptest::option::of(any::<[u8; 20]>())) {
        let key = Keypair::from_seed([3; 32]);
        let tx = proml_core::ledger::sign_call(&key, nonce, target.map(Address), Call::new(method, args), 100_000);
        prop_assert_eq!(Transaction::decode_exact(&tx.encode_to_vec()).unwrap(), tx);
    }
}

#[test]
fn schedule_is_a_pure_rotation() {
    let h = Harness::new(5);
    let vset = h.genesis().validator_set().unwrap();
    for slot in 0..50u64 {
        assert_eq!(
            proposer_for_slot(&vset, slot),
            vset.validators()[(slot % 5) as usize]
        );
    }
}

#[test]
fn gas_identical_across_independent_runs() {
    let ops = vec![
        Op::Dataset {
            who: 0,
            ancestor: None,
            empty: false,
        },
        Op::Model { who: 1 },
        Op::Seal,
        Op::Record {
            who: 1,
            model: 0,
            activity: 0,
            big: false,
        },
        Op::Record {
            who: 1,
            model: 0,
            activity: 1,
            big: false,
        },
    ];
    let a: Vec<u64> = run(&ops).included.iter().map(|(_, r)| r.gas_used).collect();
    let b: Vec<u64> = run(&ops).included.iter().map(|(_, r)| r.gas_used).collect();
    assert_eq!(a, b);
}
