#![allow(dead_code)]

use std::time::Duration;

use base64::Engine;
use proml_core::contracts::{AssetMetadata, WorkflowActivity};
use proml_core::{Address, TxId};
use proml_node::types::{CaptureKind, CaptureRequest, PayloadJson, TxStatus};
use proml_node::NodeHandle;

pub fn meta(name: &str) -> AssetMetadata {
    AssetMetadata {
        name: name.into(),
        version: "1".into(),
        description: format!("{name} fixture"),
    }
}

pub fn register_dataset(name: &str, ancestor: Option<Address>) -> CaptureRequest {
    let mut req = CaptureRequest::new(CaptureKind::RegisterDataset);
    req.metadata = Some(meta(name));
    req.ancestor = ancestor;
    req
}

pub fn register_model(name: &str) -> CaptureRequest {
    let mut req = CaptureRequest::new(CaptureKind::RegisterModel);
    req.metadata = Some(meta(name));
    req
}

pub fn record(
    asset: Address,
    activity: WorkflowActivity,
    params: serde_json::Value,
) -> CaptureRequest {
    let mut req = CaptureRequest::new(CaptureKind::RecordActivity);
    req.asset = Some(asset);
    req.activity = Some(activity);
    req.payload = Some(PayloadJson {
        params: serde_json::from_value(params).unwrap(),
        ..PayloadJson::default()
    });
    req
}

pub fn publish(asset: Address, blob: &[u8]) -> CaptureRequest {
    let mut req = CaptureRequest::new(CaptureKind::Publish);
    req.asset = Some(asset);
    req.inline_blob = Some(base64::engine::general_purpose::STANDARD.encode(blob));
    req
}

/// Polls until the transaction is included or `limit` passes.
pub async fn wait_included(node: &NodeHandle, id: &TxId, limit: Duration) -> TxStatus {
    let deadline = tokio::time::Instant::now() + limit;
    loop {
        let status = node.tx_status(id);
        if status.included || tokio::time::Instant::now() >= deadline {
            return status;
        }
        tokio::time::sleep(Duration::from_millis(100)).await;
    }
}

pub async fn wait_until(limit: Duration, mut f: impl FnMut() -> bool) -> bool {
    let deadline = tokio::time::Instant::now() + limit;
    while tokio::time::Instant::now() < deadline {
        if f() {
            return true;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    f()
}

/// Registers a dataset and a model, then records all seven model
/// activities. Returns (dataset, model).
pub async fn run_workload(data: &NodeHandle, dev: &NodeHandle) -> (Address, Address) {
    let d1 = data
        .capture(register_dataset("kdd-raw", None))
        .await
        .unwrap();
    let d1_addr = d1.asset.unwrap();
    wait_included(data, &d1.tx_id, Duration::from_secs(120)).await;
    let d2 = data
        .capture(register_dataset("kdd-clean", Some(d1_addr)))
        .await
        .unwrap();
    let d2_addr = d2.asset.unwrap();
    let m = dev.capture(register_model("ids-net")).await.unwrap();
    let model = m.asset.unwrap();
    wait_included(dev, &m.tx_id, Duration::from_secs(120)).await;
    let mut last = m.tx_id;
    for (i, activity) in WorkflowActivity::MODEL_ACTIVITIES.into_iter().enumerate() {
        let params = serde_json::json!({ "dataset": d2_addr.to_hex(), "step": i });
        last = dev
            .capture(record(model, activity, params))
            .await
            .unwrap()
            .tx_id;
    }
    assert!(
        wait_included(dev, &last, Duration::from_secs(120))
            .await
            .included
    );
    (d2_addr, model)
}
