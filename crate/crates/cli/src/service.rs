//! HTTP synthesis service.
//!
//! Handlers read an `Arc<Snapshot>` clone under a short read lock and never
//! hold a lock across generation. The admin swap loads and validates the new
//! checkpoint completely before replacing the `Arc`, so a request sees either
//! the old snapshot or the new one.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::synthesis::{synthesize, Snapshot, SynthesisError, SynthesisOutput, SynthesisRequest};

pub struct AppState {
    snapshot: RwLock<Arc<Snapshot>>,
    results: RwLock<HashMap<String, Arc<SynthesisOutput>>>,
}

impl AppState {
    pub fn new(snapshot: Snapshot) -> Arc<Self> {
        Arc::new(AppState {
            snapshot: RwLock::new(Arc::new(snapshot)),
            results: RwLock::new(HashMap::new()),
        })
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn swap(&self, next: Snapshot) -> Arc<Snapshot> {
        std::mem::replace(&mut *self.snapshot.write().expect("snapshot lock"), Arc::new(next))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic_id: Option<String>,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl ToString, field: Option<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: error.into(),
                message: message.to_string(),
                field,
                diagnostic_id: None,
            },
        }
    }

    /// Logs the cause under a fresh id and returns only the id to the client.
    fn internal(cause: impl std::fmt::Display) -> Self {
        let id = uuid::Uuid::new_v4().to_string();
        log::error!("[{id}] {cause}");
        let mut e = Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "synthesis failed", None);
        e.body.diagnostic_id = Some(id);
        e
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<SynthesisError> for ApiError {
    fn from(e: SynthesisError) -> Self {
        match e {
            SynthesisError::Request { field, message } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message, Some(field))
            }
            SynthesisError::Conflict(m) => Self::new(StatusCode::CONFLICT, "checkpoint_mismatch", m, None),
            SynthesisError::Internal(e) => Self::internal(e),
        }
    }
}

/// Deserializes a JSON body, reporting the path of the first offending field.
fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = (path != ".").then_some(path);
        ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", e.into_inner(), field)
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub checkpoint_id: String,
    pub dataset_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Classes {
    pub checkpoint_id: String,
    pub class_names: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwapRequest {
    /// A checkpoint file on the server's filesystem.
    pub path: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SwapResponse {
    pub checkpoint_id: String,
    pub previous_checkpoint_id: String,
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    let s = state.snapshot();
    Json(Health {
        status: "ok".into(),
        checkpoint_id: s.hash.clone(),
        dataset_id: s.checkpoint.dataset_id.clone(),
    })
}

async fn classes(State(state): State<Arc<AppState>>) -> Json<Classes> {
    let s = state.snapshot();
    Json(Classes {
        checkpoint_id: s.hash.clone(),
        class_names: s.checkpoint.class_names.clone(),
    })
}

async fn post_synthesize(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<SynthesisOutput>, ApiError> {
    let request: SynthesisRequest = parse_body(&body)?;
    let snapshot = state.snapshot();
    let output = tokio::task::spawn_blocking(move || synthesize(&snapshot, &request))
        .await
        .map_err(ApiError::internal)??;
    let output = Arc::new(output);
    state
        .results
        .write()
        .expect("results lock")
        .insert(output.id.clone(), output.clone());
    Ok(Json(output.as_ref().clone()))
}

async fn get_sequence(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SynthesisOutput>, ApiError> {
    let found = state.results.read().expect("results lock").get(&id).cloned();
    found
        .map(|o| Json(o.as_ref().clone()))
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no stored sequence '{id}'"), None))
}

async fn swap_checkpoint(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<SwapResponse>, ApiError> {
    let request: SwapRequest = parse_body(&body)?;
    let path = request.path.clone();
    let next = tokio::task::spawn_blocking(move || Snapshot::load(&path))
        .await
        .map_err(ApiError::internal)?
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_checkpoint", e, Some("path".into())))?;
    let checkpoint_id = next.hash.clone();
    let previous = state.swap(next);
    log::info!("checkpoint swapped {} -> {checkpoint_id}", previous.hash);
    Ok(Json(SwapResponse {
        checkpoint_id,
        previous_checkpoint_id: previous.hash.clone(),
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/classes", get(classes))
        .route("/synthesize", post(post_synthesize))
        .route("/sequences/{id}", get(get_sequence))
        .route("/admin/checkpoint", post(swap_checkpoint))
        .with_state(state)
}

/// Serves until interrupted.
pub async fn serve(snapshot: Snapshot, bind: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(snapshot)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
