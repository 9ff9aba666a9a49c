use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::encoder::BackendKind;
use crate::error::{Error, Result};
use crate::head::Label;

use super::engine::{ms_since, Engine};

/// Finished or pending transcripts kept for polling; oldest are evicted.
const TRANSCRIPT_CAPACITY: usize = 1024;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TranscriptState {
    Pending,
    Done { transcript: String },
    Failed,
}

#[derive(Clone)]
pub struct AppState {
    engine: Arc<Engine>,
    transcripts: Arc<Mutex<BTreeMap<u64, TranscriptState>>>,
    next_id: Arc<AtomicU64>,
}

impl AppState {
    pub fn new(engine: Arc<Engine>) -> Self {
        Self { engine, transcripts: Arc::default(), next_id: Arc::new(AtomicU64::new(1)) }
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    fn put_transcript(&self, id: u64, state: TranscriptState) {
        let mut map = self.transcripts.lock().expect("transcript store poisoned");
        map.insert(id, state);
        while map.len() > TRANSCRIPT_CAPACITY {
            map.pop_first();
        }
    }
}

#[derive(Debug, Default, Deserialize)]
pub struct ClassifyQuery {
    #[serde(default)]
    pub transcribe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub label: Label,
    pub p_malicious: f64,
    pub threshold: f64,
    pub review: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
    /// Poll `GET /v1/transcripts/{id}` for the transcript.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript_id: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub param_count: usize,
    pub backend: BackendKind,
    pub threshold: f64,
    pub supports_transcription: bool,
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

fn api_error(e: &Error) -> ApiError {
    match e {
        Error::MalformedContainer(_) | Error::EmptyInput => ApiError(StatusCode::BAD_REQUEST, e.to_string()),
        Error::UnsupportedEncoding(_) => ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        _ => {
            tracing::error!(error = %e, "classification failed");
            ApiError(StatusCode::INTERNAL_SERVER_ERROR, "internal error".into())
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/classify", post(classify))
        .route("/v1/transcripts/{id}", get(transcript))
        .with_state(state)
}

async fn health(State(st): State<AppState>) -> Json<HealthResponse> {
    let e = &st.engine;
    Json(HealthResponse {
        status: "ok".into(),
        param_count: e.head().param_count(),
        backend: e.config().backend.kind,
        threshold: e.config().threshold,
        supports_transcription: e.supports_transcription(),
    })
}

async fn classify(
    State(st): State<AppState>,
    Query(q): Query<ClassifyQuery>,
    body: Bytes,
) -> std::result::Result<Json<ClassifyResponse>, ApiError> {
    let engine = st.engine.clone();
    let want = q.transcribe && engine.supports_transcription();
    let (body_for_err, st2) = (body.clone(), st.clone());
    let result = tokio::task::spawn_blocking(move || -> Result<ClassifyResponse> {
        let prepared = engine.prepare(&body)?;
        let transcript_id = want.then(|| {
            let id = st2.next_id.fetch_add(1, Ordering::Relaxed);
            st2.put_transcript(id, TranscriptState::Pending);
            let (eng, spec, st3) = (engine.clone(), prepared.spectrogram.clone(), st2.clone());
            tokio::task::spawn_blocking(move || {
                let state = match eng.transcribe(&spec) {
                    Some(transcript) => TranscriptState::Done { transcript },
                    None => TranscriptState::Failed,
                };
                st3.put_transcript(id, state);
            });
            id
        });
        let scored = engine.score(&prepared)?;
        engine.commit(&prepared, &scored, ms_since(prepared.started))?;
        let d = scored.decision;
        Ok(ClassifyResponse {
            label: d.label,
            p_malicious: d.p_malicious,
            threshold: d.threshold,
            review: d.review,
            transcript: None,
            transcript_id,
        })
    })
    .await
    .map_err(|e| {
        tracing::error!(error = %e, "classification task panicked");
        ApiError(StatusCode::INTERNAL_SERVER_ERROR, "internal error".into())
    })?;

    match result {
        Ok(mut resp) => {
            if let Some(id) = resp.transcript_id {
                // Attach the transcript only if it already happens to be done.
                if let Some(TranscriptState::Done { transcript }) = st.transcripts.lock().expect("poisoned").get(&id) {
                    resp.transcript = Some(transcript.clone());
                }
            }
            Ok(Json(resp))
        }
        Err(e) => {
            st.engine.record_error(&body_for_err, &e);
            Err(api_error(&e))
        }
    }
}

async fn transcript(State(st): State<AppState>, Path(id): Path<u64>) -> Response {
    match st.transcripts.lock().expect("transcript store poisoned").get(&id).cloned() {
        None => ApiError(StatusCode::NOT_FOUND, format!("no transcript {id}")).into_response(),
        Some(s @ TranscriptState::Pending) => (StatusCode::ACCEPTED, Json(s)).into_response(),
        Some(s) => Json(s).into_response(),
    }
}

/// Serve until Ctrl-C, then flush the audit log.
pub async fn serve(engine: Arc<Engine>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(AppState::new(engine.clone())))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    engine.audit_log().flush()
}
