//! The HTTP API against a live single-validator network on real time.

mod common;

use std::time::Duration;

use base64::Engine;
use common::*;
use proml_core::offchain::ContentId;
use proml_core::Address;
use proml_node::devnet::{DevNet, DevNetOptions};
use proml_node::types::{AssetList, CaptureResponse, ErrorBody, EventsPage, NodeStatus, TxStatus};
use proml_node::{api, NodeHandle};
use reqwest::StatusCode;
use serde_json::json;

async fn serve(node: NodeHandle) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(api::serve(listener, node));
    url
}

fn fast_net(observers: &[&str]) -> DevNet {
    DevNet::start(DevNetOptions {
        validators: 1,
        observers: observers.iter().map(|s| s.to_string()).collect(),
        block_interval_seconds: 1,
        link_latency: Duration::from_millis(5),
        ..DevNetOptions::default()
    })
    .unwrap()
}

async fn post(c: &reqwest::Client, url: &str, body: serde_json::Value) -> reqwest::Response {
    c.post(format!("{url}/v1/provenance"))
        .json(&body)
        .send()
        .await
        .unwrap()
}

async fn included(c: &reqwest::Client, url: &str, status_url: &str) -> TxStatus {
    for _ in 0..100 {
        let s: TxStatus = c
            .get(format!("{url}{status_url}"))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        if s.included {
            return s;
        }
        tokio::time::sleep(Duration::from_millis(100)).await;
    }
    panic!("not included");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn capture_lifecycle_over_http() {
    let net = fast_net(&[]);
    let url = serve(net.node(0)).await;
    let c = reqwest::Client::new();

    let r = post(
        &c,
        &url,
        json!({"kind": "register_dataset", "metadata": {"name": "kdd-raw"}}),
    )
    .await;
    assert_eq!(r.status(), StatusCode::ACCEPTED);
    let d1: CaptureResponse = r.json().await.unwrap();
    let fresh: TxStatus = c
        .get(format!("{url}{}", d1.status_url))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(!fresh.included);
    assert_eq!(fresh.confirmations, 0);
    let s = included(&c, &url, &d1.status_url).await;
    assert_eq!(s.receipt.unwrap().new_contract, d1.asset);

    let r = post(
        &c,
        &url,
        json!({"kind": "register_model", "metadata": {"name": "ids-net"}}),
    )
    .await;
    let m: CaptureResponse = r.json().await.unwrap();
    let model = m.asset.unwrap();
    included(&c, &url, &m.status_url).await;

    let params: serde_json::Map<String, serde_json::Value> = (0..64)
        .map(|i| (format!("w{i:02}"), json!("x".repeat(24))))
        .collect();
    let r = post(
        &c,
        &url,
        json!({
            "kind": "record_activity", "asset": model.to_hex(), "activity": "select_data",
            "payload": {"inputs": {"dataset": d1.asset.unwrap().to_hex()}, "params": params}
        }),
    )
    .await;
    assert_eq!(r.status(), StatusCode::ACCEPTED);
    let rec: CaptureResponse = r.json().await.unwrap();
    let s = included(&c, &url, &rec.status_url).await;
    assert_eq!(s.accepted_transition, Some(true));
    assert!(s.receipt.unwrap().status.is_success());

    let history: Vec<serde_json::Value> = c
        .get(format!("{url}/v1/assets/{model}/history"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(history.len(), 1);
    assert_eq!(history[0]["activity"], "select_data");

    let list: AssetList = c
        .get(format!("{url}/v1/assets?participant={}", net.address(0)))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(list.assets, vec![d1.asset.unwrap(), model]);

    let view: serde_json::Value = c
        .get(format!("{url}/v1/assets/{model}"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(view["stage"], "data_selected");

    // Wait a few blocks and check the confirmation count is tip based.
    tokio::time::sleep(Duration::from_millis(2_500)).await;
    let s: TxStatus = c
        .get(format!("{url}{}", d1.status_url))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let status: NodeStatus = c
        .get(format!("{url}/v1/status"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(s.confirmations >= 3);
    assert!(s.confirmations <= status.height - s.height.unwrap() + 2);

    let page: EventsPage = c
        .get(format!("{url}/v1/events?from_height=0"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let names: Vec<&str> = page.events.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(
        &names[..3],
        &["DatasetRegistered", "ModelRegistered", "StageAdvanced"]
    );

    let block: serde_json::Value = c
        .get(format!("{url}/v1/blocks/1"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(block["block"]["header"]["height"], 1);
    assert_eq!(
        c.get(format!("{url}/v1/blocks/999999"))
            .send()
            .await
            .unwrap()
            .status(),
        StatusCode::NOT_FOUND
    );
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn malformed_requests_are_400_and_unknown_assets_404() {
    let net = fast_net(&[]);
    let url = serve(net.node(0)).await;
    let c = reqwest::Client::new();
    let model = Address([3; 20]).to_hex();
    for body in [
        json!({"kind": "record_activity", "activity": "train"}),
        json!({"kind": "record_activity", "asset": model}),
        json!({"kind": "register_model", "asset": model, "metadata": {"name": "m"}}),
        json!({"kind": "register_dataset", "metadata": {"name": ""}}),
        json!({"kind": "record_activity", "asset": model, "activity": "publish"}),
        json!({"kind": "publish", "asset": model}),
        json!({"kind": "publish", "asset": model, "inline_blob": "%%%"}),
        json!({"kind": "teleport"}),
        json!({"kind": "register_model", "metadata": {"name": "m"}, "signing_key": "00"}),
    ] {
        let r = post(&c, &url, body.clone()).await;
        assert_eq!(r.status(), StatusCode::BAD_REQUEST, "{body}");
        let e: ErrorBody = r.json().await.unwrap();
        assert!(!e.error.is_empty());
    }
    let r = c
        .post(format!("{url}/v1/provenance"))
        .body("not json")
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);
    for path in [
        format!("/v1/assets/{model}"),
        format!("/v1/assets/{model}/history"),
    ] {
        assert_eq!(
            c.get(format!("{url}{path}")).send().await.unwrap().status(),
            StatusCode::NOT_FOUND
        );
    }
    assert_eq!(
        c.get(format!("{url}/v1/tx/nothex"))
            .send()
            .await
            .unwrap()
            .status(),
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn publish_offloads_the_blob_and_serves_it_back() {
    let net = fast_net(&["observer"]);
    let url = serve(net.node(0)).await;
    let observer_url = serve(net.node(1)).await;
    let c = reqwest::Client::new();
    let node = net.node(0);
    let (_, model) = run_workload(&node, &node).await;
    let blob = b"serialized ids-net weights".repeat(100);
    let b64 = base64::engine::general_purpose::STANDARD.encode(&blob);
    let r = post(
        &c,
        &url,
        json!({"kind": "publish", "asset": model.to_hex(), "inline_blob": b64}),
    )
    .await;
    assert_eq!(r.status(), StatusCode::ACCEPTED);
    let p: CaptureResponse = r.json().await.unwrap();
    let content = p.content.unwrap();
    assert_eq!(content, ContentId::of(&blob));
    included(&c, &url, &p.status_url).await;
    let view: serde_json::Value = c
        .get(format!("{url}/v1/assets/{model}"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(view["artifact_anchor"], content.to_string());
    // The observer never stored it and fetches it from the validator.
    let got = c
        .get(format!("{observer_url}/v1/blobs/{content}"))
        .send()
        .await
        .unwrap();
    assert_eq!(got.status(), StatusCode::OK);
    assert_eq!(got.bytes().await.unwrap().as_ref(), &blob[..]);
    let missing = ContentId::of(b"absent");
    assert_eq!(
        c.get(format!("{url}/v1/blobs/{missing}"))
            .send()
            .await
            .unwrap()
            .status(),
        StatusCode::NOT_FOUND
    );
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn isolated_observer_answers_503() {
    let mut net = fast_net(&["observer"]);
    let url = serve(net.node(1)).await;
    net.stop(0);
    let c = reqwest::Client::new();
    let r = post(
        &c,
        &url,
        json!({"kind": "register_model", "metadata": {"name": "m"}}),
    )
    .await;
    assert_eq!(r.status(), StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn long_poll_returns_on_next_block() {
    let net = fast_net(&[]);
    let node = net.node(0);
    let url = serve(node.clone()).await;
    let c = reqwest::Client::new();
    let next = node.height() + 1;
    let started = std::time::Instant::now();
    let page: EventsPage = c
        .get(format!(
            "{url}/v1/events?from_height={next}&timeout_ms=5000"
        ))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(started.elapsed() < Duration::from_millis(2_000));
    assert!(page.next_height > next);
}
