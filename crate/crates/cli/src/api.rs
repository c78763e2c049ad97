//! What the CLI and the bench need from a node, over HTTP or in process.

use std::future::Future;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use proml_core::contracts::{AssetView, ProvenanceRecord, QueryError};
use proml_core::offchain::{ContentId, StoreError};
use proml_core::{Address, TxId};
use proml_node::types::{BlockView, CaptureRequest, CaptureResponse, NodeStatus, TxStatus};
use proml_node::{CaptureError, NodeHandle};
use serde::de::DeserializeOwned;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    /// The node answered with an error status.
    #[error("node returned {code}: {message}")]
    Status { code: u16, message: String },
    #[error("cannot reach node: {0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ApiError {
    pub fn is_not_found(&self) -> bool {
        matches!(self, ApiError::Status { code: 404, .. })
    }
}

pub trait NodeApi: Sync {
    fn capture(
        &self,
        req: &CaptureRequest,
    ) -> impl Future<Output = Result<CaptureResponse, ApiError>> + Send;
    fn tx_status(&self, id: &TxId) -> impl Future<Output = Result<TxStatus, ApiError>> + Send;
    fn asset(&self, addr: &Address) -> impl Future<Output = Result<AssetView, ApiError>> + Send;
    fn history(
        &self,
        addr: &Address,
    ) -> impl Future<Output = Result<Vec<ProvenanceRecord>, ApiError>> + Send;
    fn block(&self, height: u64) -> impl Future<Output = Result<BlockView, ApiError>> + Send;
    fn status(&self) -> impl Future<Output = Result<NodeStatus, ApiError>> + Send;
    fn blob(&self, id: &ContentId) -> impl Future<Output = Result<Vec<u8>, ApiError>> + Send;
    /// Client wall clock, unix milliseconds.
    fn now_ms(&self) -> u64;
}

/// A node reached over its HTTP API.
#[derive(Debug, Clone)]
pub struct HttpApi {
    base: String,
    client: reqwest::Client,
}

impl HttpApi {
    pub fn new(base: &str) -> HttpApi {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .expect("http client");
        HttpApi {
            base: base.trim_end_matches('/').to_string(),
            client,
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    async fn send(&self, req: reqwest::RequestBuilder) -> Result<reqwest::Response, ApiError> {
        let resp = req
            .send()
            .await
            .map_err(|e| ApiError::Transport(e.to_string()))?;
        let code = resp.status();
        if code.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await.unwrap_or_default();
        let message = serde_json::from_str::<serde_json::Value>(&text)
            .ok()
            .and_then(|v| v.get("error").and_then(|e| e.as_str()).map(str::to_string))
            .unwrap_or(text);
        Err(ApiError::Status {
            code: code.as_u16(),
            message,
        })
    }

    async fn get_json<T: DeserializeOwned>(&self, path: &str) -> Result<T, ApiError> {
        let resp = self
            .send(self.client.get(format!("{}{path}", self.base)))
            .await?;
        resp.json()
            .await
            .map_err(|e| ApiError::Decode(e.to_string()))
    }
}

impl NodeApi for HttpApi {
    async fn capture(&self, req: &CaptureRequest) -> Result<CaptureResponse, ApiError> {
        let url = format!("{}/v1/provenance", self.base);
        let resp = self.send(self.client.post(url).json(req)).await?;
        resp.json()
            .await
            .map_err(|e| ApiError::Decode(e.to_string()))
    }

    async fn tx_status(&self, id: &TxId) -> Result<TxStatus, ApiError> {
        self.get_json(&format!("/v1/tx/{id}")).await
    }

    async fn asset(&self, addr: &Address) -> Result<AssetView, ApiError> {
        self.get_json(&format!("/v1/assets/{addr}")).await
    }

    async fn history(&self, addr: &Address) -> Result<Vec<ProvenanceRecord>, ApiError> {
        self.get_json(&format!("/v1/assets/{addr}/history")).await
    }

    async fn block(&self, height: u64) -> Result<BlockView, ApiError> {
        self.get_json(&format!("/v1/blocks/{height}")).await
    }

    async fn status(&self) -> Result<NodeStatus, ApiError> {
        self.get_json("/v1/status").await
    }

    async fn blob(&self, id: &ContentId) -> Result<Vec<u8>, ApiError> {
        let resp = self
            .send(self.client.get(format!("{}/v1/blobs/{id}", self.base)))
            .await?;
        let bytes = resp
            .bytes()
            .await
            .map_err(|e| ApiError::Transport(e.to_string()))?;
        Ok(bytes.to_vec())
    }

    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

fn status_err(code: u16, e: impl ToString) -> ApiError {
    ApiError::Status {
        code,
        message: e.to_string(),
    }
}

fn query_err(e: QueryError) -> ApiError {
    match e {
        QueryError::UnknownAsset(_) => status_err(404, e),
        QueryError::Cycle(_) => status_err(500, e),
    }
}

/// Same status codes the HTTP layer would give.
impl NodeApi for NodeHandle {
    async fn capture(&self, req: &CaptureRequest) -> Result<CaptureResponse, ApiError> {
        NodeHandle::capture(self, req.clone())
            .await
            .map_err(|e| match e {
                CaptureError::StaleNonce => status_err(409, e),
                CaptureError::Unavailable => status_err(503, e),
                CaptureError::Store(StoreError::Storage(_)) => status_err(500, e),
                _ => status_err(400, e),
            })
    }

    async fn tx_status(&self, id: &TxId) -> Result<TxStatus, ApiError> {
        Ok(NodeHandle::tx_status(self, id))
    }

    async fn asset(&self, addr: &Address) -> Result<AssetView, ApiError> {
        NodeHandle::asset(self, addr).map_err(query_err)
    }

    async fn history(&self, addr: &Address) -> Result<Vec<ProvenanceRecord>, ApiError> {
        NodeHandle::history(self, addr).map_err(query_err)
    }

    async fn block(&self, height: u64) -> Result<BlockView, ApiError> {
        self.block_view(height)
            .ok_or_else(|| status_err(404, format!("no block at {height}")))
    }

    async fn status(&self) -> Result<NodeStatus, ApiError> {
        Ok(NodeHandle::status(self))
    }

    async fn blob(&self, id: &ContentId) -> Result<Vec<u8>, ApiError> {
        self.get_blob(id).await.map_err(|e| match e {
            StoreError::NotFound => status_err(404, e),
            StoreError::Integrity(_) => status_err(502, e),
            _ => status_err(500, e),
        })
    }

    fn now_ms(&self) -> u64 {
        self.clock().now_ms()
    }
}
