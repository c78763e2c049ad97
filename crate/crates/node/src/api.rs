//! JSON over HTTP. Submission is asynchronous: callers poll the status URL.

use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use proml_core::contracts::QueryError;
use proml_core::offchain::{ContentId, StoreError};
use proml_core::{Address, TxId};
use serde::Deserialize;

use crate::capture::CaptureError;
use crate::node::NodeHandle;
use crate::types::{CaptureRequest, ErrorBody};

/// Base64 of a maximal blob plus the rest of the request.
const MAX_BODY: usize = 1_500_000_000;

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

fn bad_request(msg: impl ToString) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.to_string())
}

impl From<CaptureError> for ApiError {
    fn from(e: CaptureError) -> Self {
        let status = match &e {
            CaptureError::BadRequest(_) | CaptureError::Refused(_) => StatusCode::BAD_REQUEST,
            CaptureError::StaleNonce => StatusCode::CONFLICT,
            CaptureError::Unavailable => StatusCode::SERVICE_UNAVAILABLE,
            CaptureError::Store(StoreError::TooLarge { .. } | StoreError::Empty) => {
                StatusCode::BAD_REQUEST
            }
            CaptureError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        let status = match e {
            QueryError::UnknownAsset(_) => StatusCode::NOT_FOUND,
            QueryError::Cycle(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

type ApiResult = Result<Response, ApiError>;

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, ApiError>
where
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e| bad_request(format!("bad {what} {s:?}: {e}")))
}

async fn capture(State(node): State<NodeHandle>, body: Bytes) -> ApiResult {
    let req: CaptureRequest = serde_json::from_slice(&body).map_err(bad_request)?;
    let resp = node.capture(req).await?;
    Ok((StatusCode::ACCEPTED, Json(resp)).into_response())
}

async fn tx(State(node): State<NodeHandle>, Path(id): Path<String>) -> ApiResult {
    let id: TxId = parse(&id, "tx id")?;
    Ok(Json(node.tx_status(&id)).into_response())
}

async fn asset(State(node): State<NodeHandle>, Path(addr): Path<String>) -> ApiResult {
    let addr: Address = parse(&addr, "address")?;
    Ok(Json(node.asset(&addr)?).into_response())
}

async fn history(State(node): State<NodeHandle>, Path(addr): Path<String>) -> ApiResult {
    let addr: Address = parse(&addr, "address")?;
    Ok(Json(node.history(&addr)?).into_response())
}

#[derive(Deserialize)]
struct AssetsQuery {
    participant: String,
}

async fn assets(State(node): State<NodeHandle>, Query(q): Query<AssetsQuery>) -> ApiResult {
    let who: Address = parse(&q.participant, "participant")?;
    Ok(Json(node.assets_of(&who)).into_response())
}

#[derive(Deserialize)]
struct EventsQuery {
    #[serde(default)]
    from_height: u64,
    #[serde(default)]
    timeout_ms: u64,
}

async fn events(State(node): State<NodeHandle>, Query(q): Query<EventsQuery>) -> ApiResult {
    let page = node
        .events(q.from_height, Duration::from_millis(q.timeout_ms))
        .await;
    Ok(Json(page).into_response())
}

async fn block(State(node): State<NodeHandle>, Path(h): Path<String>) -> ApiResult {
    let h: u64 = parse(&h, "height")?;
    match node.block_view(h) {
        Some(view) => Ok(Json(view).into_response()),
        None => Err(ApiError(StatusCode::NOT_FOUND, format!("no block at {h}"))),
    }
}

async fn blob(State(node): State<NodeHandle>, Path(cid): Path<String>) -> ApiResult {
    let id: ContentId = parse(&cid, "content id")?;
    match node.get_blob(&id).await {
        Ok(bytes) => {
            Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
        }
        Err(StoreError::NotFound) => Err(ApiError(StatusCode::NOT_FOUND, "blob not found".into())),
        Err(e @ StoreError::Integrity(_)) => Err(ApiError(StatusCode::BAD_GATEWAY, e.to_string())),
        Err(e) => Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
    }
}

async fn status(State(node): State<NodeHandle>) -> ApiResult {
    Ok(Json(node.status()).into_response())
}

pub fn router(node: NodeHandle) -> Router {
    Router::new()
        .route("/v1/provenance", post(capture))
        .route("/v1/tx/{id}", get(tx))
        .route("/v1/assets", get(assets))
        .route("/v1/assets/{addr}", get(asset))
        .route("/v1/assets/{addr}/history", get(history))
        .route("/v1/events", get(events))
        .route("/v1/blocks/{height}", get(block))
        .route("/v1/blobs/{cid}", get(blob))
        .route("/v1/status", get(status))
        .layer(DefaultBodyLimit::max(MAX_BODY))
        .with_state(node)
}

/// Serves the API until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, node: NodeHandle) -> std::io::Result<()> {
    axum::serve(listener, router(node)).await
}
