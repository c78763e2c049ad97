//! Turns capture requests into signed transactions from the node's key.

use base64::Engine;
use proml_core::contracts::{calls, NamedValue, Value};
use proml_core::ledger::{sign_call, Call, TxRejection};
use proml_core::offchain::{ContentId, StoreError};
use proml_core::{Address, Genesis};

use crate::config::Role;
use crate::node::NodeHandle;
use crate::types::{CaptureKind, CaptureRequest, CaptureResponse};

/// Retries after the first attempt loses a nonce race.
const NONCE_RETRIES: usize = 3;

/// Output name given to an inline blob attached to an activity record.
pub const ARTIFACT_OUTPUT: &str = "artifact";

#[derive(Debug, thiserror::Error)]
pub enum CaptureError {
    #[error("{0}")]
    BadRequest(String),
    #[error("nonce race lost {} times", NONCE_RETRIES + 1)]
    StaleNonce,
    #[error("no connected peers and this node does not validate")]
    Unavailable,
    #[error("transaction refused: {0}")]
    Refused(TxRejection),
    #[error("blob store: {0}")]
    Store(#[from] StoreError),
}

fn bad(msg: impl Into<String>) -> CaptureError {
    CaptureError::BadRequest(msg.into())
}

/// Request checked against the kind's field rules, blob still inline.
struct Plan {
    target: Address,
    blob: Option<Vec<u8>>,
    build: Box<dyn Fn(Option<ContentId>) -> Call + Send>,
    registers: bool,
}

fn forbid(present: bool, field: &str, kind: CaptureKind) -> Result<(), CaptureError> {
    if present {
        Err(bad(format!("{field} is not allowed for {kind:?}")))
    } else {
        Ok(())
    }
}

fn plan(req: CaptureRequest) -> Result<Plan, CaptureError> {
    let kind = req.kind;
    let blob = match &req.inline_blob {
        Some(b64) => {
            let bytes = base64::engine::general_purpose::STANDARD
                .decode(b64)
                .map_err(|e| bad(format!("inline_blob is not base64: {e}")))?;
            if bytes.is_empty() {
                return Err(bad("inline_blob is empty"));
            }
            Some(bytes)
        }
        None => None,
    };
    if blob.is_some() && req.anchor.is_some() {
        return Err(bad("give inline_blob or anchor, not both"));
    }
    let registry = Genesis::registry_address();
    match kind {
        CaptureKind::RegisterDataset => {
            forbid(req.asset.is_some(), "asset", kind)?;
            forbid(req.activity.is_some(), "activity", kind)?;
            forbid(req.payload.is_some(), "payload", kind)?;
            let metadata = req.metadata.ok_or_else(|| bad("metadata is required"))?;
            if metadata.name.is_empty() {
                return Err(bad("metadata.name is empty"));
            }
            let ancestor = req.ancestor;
            let fixed = req.anchor;
            Ok(Plan {
                target: registry,
                blob,
                build: Box::new(move |content| {
                    calls::register_dataset(metadata.clone(), ancestor, content.or(fixed))
                }),
                registers: true,
            })
        }
        CaptureKind::RegisterModel => {
            forbid(req.asset.is_some(), "asset", kind)?;
            forbid(req.activity.is_some(), "activity", kind)?;
            forbid(req.payload.is_some(), "payload", kind)?;
            forbid(req.ancestor.is_some(), "ancestor", kind)?;
            forbid(blob.is_some() || req.anchor.is_some(), "content", kind)?;
            let metadata = req.metadata.ok_or_else(|| bad("metadata is required"))?;
            if metadata.name.is_empty() {
                return Err(bad("metadata.name is empty"));
            }
            Ok(Plan {
                target: registry,
                blob,
                build: Box::new(move |_| calls::register_model(metadata.clone())),
                registers: true,
            })
        }
        CaptureKind::RecordActivity => {
            let asset = req.asset.ok_or_else(|| bad("asset is required"))?;
            let activity = req.activity.ok_or_else(|| bad("activity is required"))?;
            if !activity.is_model_activity() {
                return Err(bad(format!("{activity} is not a recordable activity")));
            }
            forbid(req.metadata.is_some(), "metadata", kind)?;
            forbid(req.ancestor.is_some(), "ancestor", kind)?;
            let payload = req.payload.unwrap_or_default().to_payload();
            let fixed = req.anchor;
            Ok(Plan {
                target: asset,
                blob,
                build: Box::new(move |content| {
                    let mut payload = payload.clone();
                    if let Some(c) = content.or(fixed) {
                        payload
                            .outputs
                            .push(NamedValue::new(ARTIFACT_OUTPUT, Value::Content(c)));
                    }
                    calls::record(activity, &payload)
                }),
                registers: false,
            })
        }
        CaptureKind::Publish => {
            let asset = req.asset.ok_or_else(|| bad("asset is required"))?;
            forbid(req.activity.is_some(), "activity", kind)?;
            forbid(req.metadata.is_some(), "metadata", kind)?;
            forbid(req.ancestor.is_some(), "ancestor", kind)?;
            forbid(req.payload.is_some(), "payload", kind)?;
            if blob.is_none() && req.anchor.is_none() {
                return Err(bad("publish needs inline_blob or anchor"));
            }
            let fixed = req.anchor;
            Ok(Plan {
                target: asset,
                blob,
                build: Box::new(move |content| {
                    calls::publish(content.or(fixed).expect("checked above"))
                }),
                registers: false,
            })
        }
    }
}

impl NodeHandle {
    /// Validates, offloads any inline blob, then signs and queues the
    /// transaction. Returns once the local node has accepted it into the
    /// pool; inclusion is reported through [`NodeHandle::tx_status`].
    pub async fn capture(&self, req: CaptureRequest) -> Result<CaptureResponse, CaptureError> {
        let plan = plan(req)?;
        if self.shared.role != Role::Validator && self.peers().is_empty() {
            return Err(CaptureError::Unavailable);
        }
        let content = match &plan.blob {
            Some(bytes) => Some(self.put_blob(bytes)?),
            None => None,
        };
        let call = (plan.build)(content);
        let wallet = self.shared.wallet.clone();
        let me = wallet.address();
        let _turn = wallet.serialize().await;
        for _ in 0..=NONCE_RETRIES {
            let nonce = {
                let chain_nonce = self.shared.chain.read().state().nonce_of(&me);
                let pool_nonce = self.shared.pool.lock().next_nonce(&me).unwrap_or(0);
                chain_nonce.max(pool_nonce)
            };
            let tx = sign_call(
                wallet.keypair(),
                nonce,
                Some(plan.target),
                call.clone(),
                self.shared.gas_limit,
            );
            let tx_id = tx.tx_id();
            match self.submit_transaction(tx).await {
                Ok(()) => {
                    return Ok(CaptureResponse {
                        tx_id,
                        asset: plan.registers.then(|| Address::for_contract(&me, nonce)),
                        status_url: format!("/v1/tx/{tx_id}"),
                        content,
                    })
                }
                Err(TxRejection::BadNonce { .. }) => continue,
                Err(other) => return Err(CaptureError::Refused(other)),
            }
        }
        Err(CaptureError::StaleNonce)
    }
}
