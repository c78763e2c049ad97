mod common;

use common::*;
use proml_core::codec::Encode;
use proml_core::contracts::{
    calls, fold_stage, history, lineage, ActivityPayload, LinearModelWorkflow, NamedValue,
    ProvenanceEvent, Value, WorkflowActivity as A, WorkflowStage as S,
};
use proml_core::engine::{
    apply_transaction, BlockContext, ExecParams, ExecStatus, GasSchedule, RevertReason,
};
use proml_core::ledger::{intrinsic_gas, sign_call, Call, TxRejection};
use proml_core::offchain::ContentId;
use proml_core::Address;

fn ctx() -> BlockContext {
    BlockContext {
        height: 1,
        timestamp: GENESIS_TIME + 13,
    }
}

fn reverted(r: &proml_core::engine::Receipt) -> Option<RevertReason> {
    match r.status {
        ExecStatus::Success => None,
        ExecStatus::Reverted(reason) => Some(reason),
    }
}

#[test]
fn call_to_missing_contract_only_bumps_nonce() {
    let h = Harness::new(1);
    let key = h.key(0);
    let mut state = h.chain.state().clone();
    let before = state.clone();
    let tx = sign_call(key, 0, Some(Address([9; 20])), Call::new("x", vec![]), GAS);
    let receipt = apply_transaction(&mut state, &tx, &ctx(), &ExecParams::default()).unwrap();
    assert_eq!(reverted(&receipt), Some(RevertReason::NoSuchContract));
    assert_eq!(state.nonce_of(&key.address()), 1);
    assert_eq!(
        receipt.gas_used,
        intrinsic_gas(&tx.body, &GasSchedule::default())
    );
    assert_eq!(
        state.contracts().collect::<Vec<_>>(),
        before.contracts().collect::<Vec<_>>()
    );
}

#[test]
fn unknown_method_reverts() {
    let mut h = Harness::new(1);
    let key = h.key(0).clone();
    let reg = h.registry();
    let tx = h.tx(&key, Some(reg), Call::new("self_destruct", vec![]));
    assert_eq!(reverted(&h.one(tx)), Some(RevertReason::NoSuchMethod));
}

#[test]
fn application_is_deterministic() {
    let h = Harness::new(1);
    let tx = sign_call(
        h.key(0),
        0,
        Some(h.registry()),
        register_dataset("d", None),
        GAS,
    );
    let run = || {
        let mut s = h.chain.state().clone();
        let r = apply_transaction(&mut s, &tx, &ctx(), &ExecParams::default()).unwrap();
        (s.state_root(), r.encode_to_vec())
    };
    assert_eq!(run(), run());
}

#[test]
fn rejections_leave_state_alone() {
    let h = Harness::new(1);
    let key = h.key(0);
    let mut state = h.chain.state().clone();
    let root = state.state_root();
    let params = ExecParams::default();
    let low = sign_call(key, 0, Some(h.registry()), Call::new("x", vec![]), 1000);
    assert!(matches!(
        apply_transaction(&mut state, &low, &ctx(), &params),
        Err(TxRejection::GasTooLow { limit: 1000, .. })
    ));
    let ahead = sign_call(key, 3, Some(h.registry()), Call::new("x", vec![]), GAS);
    assert_eq!(
        apply_transaction(&mut state, &ahead, &ctx(), &params),
        Err(TxRejection::BadNonce {
            expected: 0,
            got: 3
        })
    );
    assert_eq!(state.state_root(), root);
}

#[test]
fn registry_deployment_address_is_reproducible() {
    let mut h = Harness::new(1);
    let key = h.key(0).clone();
    let tx = h.tx(&key, None, calls::deploy_registry());
    let r = h.one(tx);
    assert_eq!(r.status, ExecStatus::Success);
    let expected = Address::for_contract(&key.address(), 0);
    assert_eq!(r.new_contract, Some(expected));
    let mut preimage = key.address().0.to_vec();
    preimage.extend_from_slice(&0u64.to_be_bytes());
    let digest = proml_core::sha256(&preimage);
    assert_eq!(expected.0, digest.0[12..]);
    assert!(h.chain.state().registry(&expected).is_some());
}

#[test]
fn top_level_deploy_of_other_kinds_is_bad_init() {
    let mut h = Harness::new(1);
    let key = h.key(0).clone();
    let tx = h.tx(&key, None, register_dataset("d", None));
    let r = h.one(tx);
    assert_eq!(reverted(&r), Some(RevertReason::BadInit));
    assert_eq!(r.new_contract, None);
}

#[test]
fn factory_deploys_dataset_and_indexes_it() {
    let mut h = Harness::new(1);
    let key = h.key(0).clone();
    let reg = h.registry();
    let tx = h.tx(&key, Some(reg), register_dataset("kdd-raw", None));
    let r = h.one(tx);
    let d1 = r.new_contract.expect("dataset deployed");
    let registry = h.chain.state().registry(&reg).unwrap();
    assert_eq!(registry.dataset_addresses, vec![d1]);
    assert_eq!(registry.registered_by(&key.address()), &[d1]);
    let events: Vec<_> = r
        .events
        .iter()
        .map(|e| ProvenanceEvent::decode(e).unwrap().unwrap())
        .collect();
    assert_eq!(
        events,
        vec![ProvenanceEvent::DatasetRegistered {
            dataset: d1,
            owner: key.address(),
            ancestor: None,
            anchor: None
        }]
    );
    assert!(r.events.iter().all(|e| e.emitter == reg));
}

#[test]
fn empty_name_is_bad_init_and_creates_nothing() {
    let mut h = Harness::new(1);
    let key = h.key(0).clone();
    let reg = h.registry();
    let before = h.chain.state().contracts().count();
    let tx = h.tx(&key, Some(reg), register_dataset("", None));
    let r = h.one(tx);
    assert_eq!(reverted(&r), Some(RevertReason::BadInit));
    assert_eq!(h.chain.state().contracts().count(), before);
    let tx = h.tx(&key, Some(reg), register_model(""));
    assert_eq!(reverted(&h.one(tx)), Some(RevertReason::BadInit));
}

#[test]
fn dataset_lineage_and_unknown_ancestor() {
    let mut h = Harness::new(1);
    let key = h.key(0).clone();
    let reg = h.registry();
    let tx = h.tx(&key, Some(reg), register_dataset("raw", None));
    let d1 = h.one(tx).new_contract.unwrap();
    let tx = h.tx(&key, Some(reg), register_dataset("labelled", Some(d1)));
    let d2 = h.one(tx).new_contract.unwrap();
    assert_eq!(h.chain.state().dataset(&d2).unwrap().ancestor, Some(d1));

    let registry_before = h.chain.state().registry(&reg).unwrap().clone();
    let tx = h.tx(
        &key,
        Some(reg),
        register_dataset("orphan", Some(Address([0xab; 20]))),
    );
    assert_eq!(reverted(&h.one(tx)), Some(RevertReason::UnknownAncestor));
    assert_eq!(h.chain.state().registry(&reg).unwrap(), &registry_before);

    let d1_history = history(h.chain.state(), &d1).unwrap();
    assert_eq!(d1_history.len(), 1);
    assert_eq!(d1_history[0].activity, A::Register);
}

#[test]
fn models_get_distinct_addresses() {
    let mut h = Harness::new(1);
    let key = h.key(0).clone();
    let reg = h.registry();
    let a = h.tx(&key, Some(reg), register_dataset("d1", None));
    let b = h.tx(&key, Some(reg), register_dataset("d2", None));
    let m1 = h.tx(&key, Some(reg), register_model("ids"));
    let m2 = h.tx(&key, Some(reg), register_model("ids"));
    let rs = h.produce(&[a, b, m1, m2]);
    let addrs: Vec<Address> = rs.iter().map(|r| r.new_contract.unwrap()).collect();
    for i in 0..addrs.len() {
        for j in i + 1..addrs.len() {
            assert_ne!(addrs[i], addrs[j]);
        }
    }
    let registry = h.chain.state().registry(&reg).unwrap();
    assert_eq!(registry.registered_by(&key.address()), addrs.as_slice());
    assert_eq!(registry.model_addresses, addrs[2..].to_vec());
}

fn registered_model(h: &mut Harness) -> (Address, Address) {
    let key = h.key(0).clone();
    let reg = h.registry();
    let d = h.tx(&key, Some(reg), register_dataset("d", None));
    let m = h.tx(&key, Some(reg), register_model("m"));
    let rs = h.produce(&[d, m]);
    (rs[0].new_contract.unwrap(), rs[1].new_contract.unwrap())
}

#[test]
fn in_order_activity_advances() {
    let mut h = Harness::new(1);
    let (d, m) = registered_model(&mut h);
    let key = h.key(0).clone();
    let tx = h.tx(&key, Some(m), activity(A::SelectData, Some(d)));
    let r = h.one(tx);
    assert_eq!(r.status, ExecStatus::Success);
    let model = h.chain.state().model(&m).unwrap();
    assert_eq!(model.stage, S::DataSelected);
    assert!(model.history[0].accepted_transition);
    assert_eq!(
        ProvenanceEvent::decode(&r.events[0]).unwrap(),
        Some(ProvenanceEvent::StageAdvanced {
            asset: m,
            participant: key.address(),
            activity: A::SelectData,
            from: S::Registered,
            to: S::DataSelected
        })
    );
}

#[test]
fn out_of_order_activity_is_kept_without_transition() {
    let mut h = Harness::new(1);
    let (_, m) = registered_model(&mut h);
    let key = h.key(0).clone();
    let tx = h.tx(&key, Some(m), activity(A::Train, None));
    let r = h.one(tx);
    assert_eq!(r.status, ExecStatus::Success);
    let model = h.chain.state().model(&m).unwrap();
    assert_eq!(model.stage, S::Registered);
    assert_eq!(model.history.len(), 1);
    assert!(!model.history[0].accepted_transition);
    assert_eq!(r.events[0].name, "OutOfOrderActivity");
}

#[test]
fn full_sequence_reaches_deployed() {
    let mut h = Harness::new(1);
    let (d, m) = registered_model(&mut h);
    let key = h.key(0).clone();
    let txs: Vec<_> = A::MODEL_ACTIVITIES
        .iter()
        .map(|a| h.tx(&key, Some(m), activity(*a, Some(d))))
        .collect();
    let rs = h.produce(&txs);
    assert!(rs.iter().all(|r| r.status == ExecStatus::Success));
    let model = h.chain.state().model(&m).unwrap();
    // Oracle: walking the linear order by hand.
    let walk = [
        S::Registered,
        S::DataSelected,
        S::Preprocessed,
        S::FeaturesEngineered,
        S::Trained,
        S::Evaluated,
        S::Validated,
        S::Deployed,
    ];
    assert_eq!(model.stage, walk[7]);
    assert_eq!(model.history.len(), 7);
    assert!(model.history.iter().all(|r| r.accepted_transition));
    assert_eq!(
        fold_stage(&LinearModelWorkflow, &model.history),
        S::Deployed
    );
    let acts: Vec<_> = model.history.iter().map(|r| r.activity).collect();
    assert_eq!(acts, A::MODEL_ACTIVITIES.to_vec());
}

#[test]
fn activity_name_must_be_a_model_activity() {
    let mut h = Harness::new(1);
    let (_, m) = registered_model(&mut h);
    let key = h.key(0).clone();
    let tx = h.tx(
        &key,
        Some(m),
        Call::new("register", ActivityPayload::default().encode_to_vec()),
    );
    assert_eq!(reverted(&h.one(tx)), Some(RevertReason::NoSuchMethod));
    let tx = h.tx(&key, Some(m), Call::new("fine_tune", vec![]));
    assert_eq!(reverted(&h.one(tx)), Some(RevertReason::NoSuchMethod));
}

#[test]
fn oversized_out_of_order_record_reverts_on_size() {
    let mut h = Harness::new(1);
    let (_, m) = registered_model(&mut h);
    let key = h.key(0).clone();
    let payload = ActivityPayload {
        params: vec![NamedValue::new("blob", Value::Text("x".repeat(9000)))],
        ..Default::default()
    };
    let tx = h.tx(&key, Some(m), calls::record(A::Deploy, &payload));
    let r = h.one(tx);
    assert_eq!(reverted(&r), Some(RevertReason::PayloadTooLarge));
    assert!(r.events.is_empty());
    assert!(h.chain.state().model(&m).unwrap().history.is_empty());
}

#[test]
fn spoofed_participant_in_payload_is_ignored() {
    let mut h = Harness::new(1);
    let (_, m) = registered_model(&mut h);
    let mallory = h.participant(1).clone();
    let victim = h.key(0).address();
    let payload = ActivityPayload {
        params: vec![NamedValue::new("participant", Value::Address(victim))],
        ..Default::default()
    };
    let tx = h.tx(&mallory, Some(m), calls::record(A::SelectData, &payload));
    h.one(tx);
    let record = &h.chain.state().model(&m).unwrap().history[0];
    assert_eq!(record.participant, mallory.address());
}

#[test]
fn out_of_gas_reverts_with_full_limit() {
    let mut h = Harness::new(1);
    let key = h.key(0).clone();
    let reg = h.registry();
    let call = register_dataset("d", None);
    let limit = intrinsic_gas(
        &proml_core::ledger::UnsignedTransaction {
            sender: key.address(),
            nonce: 0,
            target: Some(reg),
            call: call.clone(),
            gas_limit: 0,
        },
        &GasSchedule::default(),
    );
    let tx = sign_call(&key, 0, Some(reg), call, limit);
    let r = h.one(tx);
    assert_eq!(reverted(&r), Some(RevertReason::OutOfGas));
    assert_eq!(r.gas_used, limit);
    assert!(h
        .chain
        .state()
        .registry(&reg)
        .unwrap()
        .dataset_addresses
        .is_empty());
}

#[test]
fn publish_rules() {
    let mut h = Harness::new(1);
    let (d, m) = registered_model(&mut h);
    let owner = h.key(0).clone();
    let mallory = h.participant(1).clone();
    let csv = b"duration,protocol_type,service\n0,tcp,http\n";
    let anchor = ContentId::of(csv);

    let tx = h.tx(&mallory, Some(d), calls::publish(anchor));
    let r = h.one(tx);
    assert_eq!(reverted(&r), Some(RevertReason::NotOwner));
    assert!(r.events.is_empty());

    let zero = ContentId {
        hash: proml_core::Hash32::ZERO,
        size: 1,
    };
    let tx = h.tx(&owner, Some(d), calls::publish(zero));
    assert_eq!(reverted(&h.one(tx)), Some(RevertReason::BadAnchor));

    let tx = h.tx(&owner, Some(d), calls::publish(anchor));
    let r = h.one(tx);
    assert_eq!(r.status, ExecStatus::Success);
    assert_eq!(
        ProvenanceEvent::decode(&r.events[0]).unwrap(),
        Some(ProvenanceEvent::AssetPublished {
            asset: d,
            participant: owner.address(),
            anchor
        })
    );
    let ds = h.chain.state().dataset(&d).unwrap();
    assert_eq!((ds.stage, ds.artifact_anchor), (S::Published, Some(anchor)));
    let tx = h.tx(&owner, Some(d), calls::publish(anchor));
    assert_eq!(reverted(&h.one(tx)), Some(RevertReason::AlreadyPublished));

    let tx = h.tx(&owner, Some(m), calls::publish(anchor));
    assert_eq!(reverted(&h.one(tx)), Some(RevertReason::NotPublishable));
}

#[test]
fn lineage_walks_two_hops() {
    let mut h = Harness::new(1);
    let key = h.key(0).clone();
    let reg = h.registry();
    let tx = h.tx(&key, Some(reg), register_dataset("raw", None));
    let d1 = h.one(tx).new_contract.unwrap();
    let tx = h.tx(&key, Some(reg), register_dataset("labelled", Some(d1)));
    let d2 = h.one(tx).new_contract.unwrap();
    let tx = h.tx(&key, Some(reg), register_model("m"));
    let m = h.one(tx).new_contract.unwrap();
    let tx = h.tx(&key, Some(m), activity(A::SelectData, Some(d2)));
    h.one(tx);

    let state = h.chain.state();
    let input = history(state, &m).unwrap()[0]
        .inputs
        .iter()
        .find_map(|nv| nv.value.as_address())
        .unwrap();
    assert_eq!(input, d2);
    let chain = lineage(state, &input).unwrap();
    let hops: Vec<Address> = chain.iter().map(|s| s.asset).collect();
    assert_eq!(hops, vec![d2, d1]);
}

#[test]
fn registration_costs_more_than_an_equal_call() {
    let s = GasSchedule::default();
    use proml_core::engine::{charge_gas, OpKind};
    assert!(
        charge_gas(&s, OpKind::Deployment, 100, 100, &[50])
            > charge_gas(&s, OpKind::Call, 100, 100, &[50])
    );
}
