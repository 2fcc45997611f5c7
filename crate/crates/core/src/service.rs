//! HTTP facade over an [`AdapterRegistry`].
//!
//! | method | path                     | body / response                                  |
//! |--------|--------------------------|--------------------------------------------------|
//! | PUT    | `/records`               | JSONL in, `{"ingested": n}` out                   |
//! | POST   | `/commit`                | `{"committed": true}`                             |
//! | GET    | `/engines`               | `{"engines": [..]}`                               |
//! | GET    | `/{engine}/search`       | `IBS1` bytes, `X-Hit-Count` header               |
//! | POST   | `/{engine}/rank`         | JSON query in, `{"total_hits", "results"}` out    |
//! | GET    | `/{engine}/similar/{id}` | `{"results": [{"id", "percent"}]}`                |
//!
//! Reads are rejected with 409 until `/commit`; writes are rejected after.

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query as QueryParams, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bridge::{
    find_similar, rank_hitset, round_percent, AdapterRegistry, BridgeError, FieldWeights, MltParams, Query,
    QueryKind, RankConfig, RankedList, SearchRankAdapter, DEFAULT_HITSET_CAP, DEFAULT_TOP_K,
};
use crate::corpus::{parse_jsonl, CorpusError, FieldName};
use crate::index::IndexError;
use crate::intbitset::{IntBitset, RecordId, MEDIA_TYPE};

pub const HIT_COUNT_HEADER: &str = "x-hit-count";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub hitset_cap: usize,
    pub top_k: usize,
    pub max_body_bytes: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            hitset_cap: DEFAULT_HITSET_CAP,
            top_k: DEFAULT_TOP_K,
            max_body_bytes: 64 * 1024 * 1024,
        }
    }
}

struct AppState {
    registry: RwLock<AdapterRegistry>,
    config: ServiceConfig,
}

type Shared = Arc<AppState>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<BridgeError> for ApiError {
    fn from(err: BridgeError) -> Self {
        let status = match &err {
            BridgeError::UnknownAdapter(_) | BridgeError::UnknownRecord(_) => StatusCode::NOT_FOUND,
            BridgeError::CapabilityUnsupported(_) => StatusCode::NOT_IMPLEMENTED,
            BridgeError::NotCommitted
            | BridgeError::AlreadyCommitted
            | BridgeError::Index(IndexError::IndexNotCommitted { .. })
            | BridgeError::Index(IndexError::IndexCommitted { .. }) => StatusCode::CONFLICT,
            BridgeError::Index(IndexError::UnknownDocument { .. }) => StatusCode::NOT_FOUND,
            BridgeError::DuplicateAdapterName(_) | BridgeError::AllZeroScores => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, err.to_string())
    }
}

impl From<CorpusError> for ApiError {
    fn from(err: CorpusError) -> Self {
        ApiError::bad_request(err.to_string())
    }
}

fn lock_poisoned() -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "registry lock poisoned")
}

/// Looks up a committed engine or produces the matching error response.
fn committed<'a>(registry: &'a AdapterRegistry, name: &str) -> Result<&'a dyn SearchRankAdapter, ApiError> {
    let adapter = registry.get(name)?;
    if !adapter.is_committed() {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("engine {name:?} is not committed")));
    }
    Ok(adapter)
}

pub fn router(registry: AdapterRegistry, config: ServiceConfig) -> Router {
    let limit = config.max_body_bytes;
    let state = Arc::new(AppState {
        registry: RwLock::new(registry),
        config,
    });
    Router::new()
        .route("/records", put(ingest))
        .route("/commit", post(commit))
        .route("/engines", get(engines))
        .route("/{engine}/search", get(search))
        .route("/{engine}/rank", post(rank))
        .route("/{engine}/similar/{id}", get(similar))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Binds `config.listen` and serves until the process is stopped.
pub async fn serve(registry: AdapterRegistry, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(registry, config)).await
}

async fn ingest(State(state): State<Shared>, body: Bytes) -> Result<Json<serde_json::Value>, ApiError> {
    let records = parse_jsonl(&body[..])?;
    let mut registry = state.registry.write().map_err(|_| lock_poisoned())?;
    let n = registry.ingest(&records)?;
    Ok(Json(json!({ "ingested": n })))
}

async fn commit(State(state): State<Shared>) -> Result<Json<serde_json::Value>, ApiError> {
    let mut registry = state.registry.write().map_err(|_| lock_poisoned())?;
    registry.commit_all()?;
    Ok(Json(json!({ "committed": true })))
}

async fn engines(State(state): State<Shared>) -> Result<Json<serde_json::Value>, ApiError> {
    let registry = state.registry.read().map_err(|_| lock_poisoned())?;
    Ok(Json(json!({ "engines": registry.names() })))
}

#[derive(Debug, Deserialize, Serialize, Clone)]
pub struct QuerySpec {
    pub field: String,
    #[serde(default)]
    pub kind: Option<String>,
    pub q: String,
}

impl QuerySpec {
    pub fn to_query(&self) -> Result<Query, ApiError> {
        let field: FieldName = self.field.parse().map_err(|e: crate::corpus::UnknownField| ApiError::bad_request(e.to_string()))?;
        let kind = match self.kind.as_deref() {
            None => QueryKind::Word,
            Some(k) => k.parse().map_err(ApiError::bad_request)?,
        };
        Ok(Query::parse(field, kind, &self.q)?)
    }
}

async fn search(
    State(state): State<Shared>,
    Path(engine): Path<String>,
    QueryParams(spec): QueryParams<QuerySpec>,
) -> Result<Response, ApiError> {
    let registry = state.registry.read().map_err(|_| lock_poisoned())?;
    let adapter = committed(&registry, &engine)?;
    let query = spec.to_query()?;
    let hits = adapter.search(&query)?;
    drop(registry);
    let count = hits.len();
    let mut response = hits.serialize().into_response();
    let headers = response.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static(MEDIA_TYPE));
    headers.insert(HIT_COUNT_HEADER, HeaderValue::from(count));
    Ok(response)
}

#[derive(Debug, Deserialize, Serialize, Clone)]
pub struct RankRequest {
    pub query: QuerySpec,
    /// Base64 of an `IBS1` payload; when absent the server searches itself.
    #[serde(default)]
    pub hitset: Option<String>,
    #[serde(default)]
    pub weights: FieldWeights,
    #[serde(default)]
    pub top_k: Option<usize>,
    #[serde(default)]
    pub hitset_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub id: RecordId,
    pub percent: f64,
}

pub fn ranked_items(list: &RankedList) -> Vec<RankedItem> {
    list.entries()
        .iter()
        .map(|e| RankedItem {
            id: e.id,
            percent: round_percent(e.percent),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankResponse {
    pub total_hits: usize,
    pub results: Vec<RankedItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarResponse {
    pub results: Vec<RankedItem>,
}

async fn rank(
    State(state): State<Shared>,
    Path(engine): Path<String>,
    body: Bytes,
) -> Result<Json<RankResponse>, ApiError> {
    let request: RankRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid rank request: {e}")))?;
    let query = request.query.to_query()?;
    request.weights.validate()?;
    let provided = match &request.hitset {
        Some(encoded) => {
            let bytes = base64::engine::general_purpose::STANDARD
                .decode(encoded)
                .map_err(|e| ApiError::bad_request(format!("invalid base64 hitset: {e}")))?;
            Some(IntBitset::deserialize(&bytes).map_err(|e| ApiError::bad_request(format!("invalid hitset: {e}")))?)
        }
        None => None,
    };
    let config = RankConfig {
        hitset_cap: request.hitset_cap.unwrap_or(state.config.hitset_cap),
        top_k: request.top_k.unwrap_or(state.config.top_k),
    };
    if config.hitset_cap == 0 || config.top_k == 0 {
        return Err(ApiError::bad_request("top_k and hitset_cap must be positive"));
    }
    let registry = state.registry.read().map_err(|_| lock_poisoned())?;
    let adapter = committed(&registry, &engine)?;
    let hitset = match provided {
        Some(h) => h,
        None => adapter.search(&query)?,
    };
    let ranked = rank_hitset(adapter, &query, &hitset, &request.weights, &config)?;
    Ok(Json(RankResponse {
        total_hits: hitset.len(),
        results: ranked_items(&ranked),
    }))
}

#[derive(Debug, Deserialize)]
struct SimilarParams {
    top_k: Option<usize>,
}

async fn similar(
    State(state): State<Shared>,
    Path((engine, id)): Path<(String, String)>,
    QueryParams(params): QueryParams<SimilarParams>,
) -> Result<Json<SimilarResponse>, ApiError> {
    let id: RecordId = id
        .parse()
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, format!("unknown record {id:?}")))?;
    let registry = state.registry.read().map_err(|_| lock_poisoned())?;
    let adapter = committed(&registry, &engine)?;
    let mlt = MltParams {
        top_k: params.top_k.unwrap_or(state.config.top_k),
        ..MltParams::default()
    };
    let ranked = find_similar(adapter, id, &mlt)?;
    Ok(Json(SimilarResponse {
        results: ranked_items(&ranked),
    }))
}
