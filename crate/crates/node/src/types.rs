//! JSON shapes of the HTTP API. Hashes and addresses are hex strings;
//! content ids are `<hash>:<size>`.

use std::collections::BTreeMap;

use proml_core::contracts::{
    ActivityPayload, AssetMetadata, NamedValue, ProvenanceEvent, Value, WorkflowActivity,
};
use proml_core::engine::Receipt;
use proml_core::ledger::{Block, TxRejection};
use proml_core::offchain::ContentId;
use proml_core::{Address, BlockHash, Hash32, TxId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptureKind {
    RegisterDataset,
    RegisterModel,
    RecordActivity,
    Publish,
}

/// Inputs, outputs and params as JSON objects keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadJson {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub outputs: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptureRequest {
    pub kind: CaptureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset: Option<Address>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activity: Option<WorkflowActivity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<AssetMetadata>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ancestor: Option<Address>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<PayloadJson>,
    /// Base64 bytes to offload to the blob store.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline_blob: Option<String>,
    /// Anchor of content already in the store, instead of `inline_blob`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<ContentId>,
}

impl CaptureRequest {
    pub fn new(kind: CaptureKind) -> Self {
        CaptureRequest {
            kind,
            asset: None,
            activity: None,
            metadata: None,
            ancestor: None,
            payload: None,
            inline_blob: None,
            anchor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureResponse {
    pub tx_id: TxId,
    /// Address the registration will deploy to, once included.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset: Option<Address>,
    pub status_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<ContentId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxStatus {
    pub tx_id: TxId,
    pub included: bool,
    pub pending: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<u64>,
    pub confirmations: u64,
    /// Timestamp of the inclusion block, seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receipt: Option<Receipt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<TxRejection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted_transition: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeStatus {
    pub address: Address,
    pub chain_id: String,
    pub validator: bool,
    pub height: u64,
    pub tip_hash: BlockHash,
    pub state_root: Hash32,
    pub tip_timestamp: u64,
    pub genesis_time: u64,
    pub block_interval_seconds: u64,
    pub peers: usize,
    pub pending: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventView {
    pub height: u64,
    pub tx_id: TxId,
    pub emitter: Address,
    pub name: String,
    /// Decoded registry event, when it is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<ProvenanceEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventsPage {
    pub events: Vec<EventView>,
    /// Pass as `from_height` on the next poll.
    pub next_height: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockView {
    pub hash: BlockHash,
    pub block: Block,
    pub receipts: Vec<Receipt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetList {
    pub participant: Address,
    pub assets: Vec<Address>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

/// Maps a JSON value onto a provenance value.
///
/// Integers become `int`, other numbers `float`. Strings that parse as an
/// address or a content id become those; other strings stay text. A
/// single-key object such as `{"text": "…"}` selects the variant
/// explicitly. Anything else is kept as its compact JSON text.
pub fn value_from_json(v: &serde_json::Value) -> Value {
    use serde_json::Value as J;
    match v {
        J::Number(n) => match n.as_i64() {
            Some(i) => Value::Int(i),
            None => Value::Float(n.as_f64().unwrap_or(f64::NAN)),
        },
        J::String(s) => {
            let bare = s.strip_prefix("0x").unwrap_or(s);
            if bare.len() == 40 {
                if let Ok(a) = bare.parse::<Address>() {
                    return Value::Address(a);
                }
            }
            if let Ok(c) = s.parse::<ContentId>() {
                return Value::Content(c);
            }
            Value::Text(s.clone())
        }
        J::Object(map) if map.len() == 1 => {
            serde_json::from_value(v.clone()).unwrap_or_else(|_| Value::Text(v.to_string()))
        }
        other => Value::Text(other.to_string()),
    }
}

pub fn value_to_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Int(i) => (*i).into(),
        Value::Float(f) => serde_json::Number::from_f64(*f)
            .map(serde_json::Value::Number)
            .unwrap_or_else(|| serde_json::json!({ "float": f.to_string() })),
        Value::Text(s) => {
            // Keep text that would read back as something else explicit.
            match value_from_json(&serde_json::Value::String(s.clone())) {
                Value::Text(_) => s.clone().into(),
                _ => serde_json::json!({ "text": s }),
            }
        }
        Value::Address(a) => a.to_hex().into(),
        Value::Content(c) => c.to_string().into(),
    }
}

fn named(map: &BTreeMap<String, serde_json::Value>) -> Vec<NamedValue> {
    map.iter()
        .map(|(k, v)| NamedValue::new(k.clone(), value_from_json(v)))
        .collect()
}

impl PayloadJson {
    /// Sections become lists sorted by name.
    pub fn to_payload(&self) -> ActivityPayload {
        ActivityPayload {
            inputs: named(&self.inputs),
            outputs: named(&self.outputs),
            params: named(&self.params),
        }
    }
}
