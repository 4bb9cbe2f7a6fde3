//! HTTP JSON API over in-memory sessions.
//!
//! Mutations of one session are serialized by a per-session commit lock and
//! computed on a blocking thread against a snapshot, so state reads (and
//! other sessions) proceed while ICP or selection runs. While a command is in
//! flight the session state reports it in `busy`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Component, Path as FsPath, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use brachyplan_core::applicator::TemplateConfig;
use brachyplan_core::Axis;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::{Mutex, RwLock};

use crate::formats::MeshJson;
use crate::session::{Command, Envelope, Session, SessionError};

struct SessionHandle {
    state: RwLock<Session>,
    commit: Mutex<()>,
}

pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
    config: TemplateConfig,
    static_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(config: TemplateConfig, static_dir: Option<PathBuf>) -> Arc<Self> {
        Arc::new(AppState { sessions: RwLock::new(HashMap::new()), config, static_dir })
    }
}

struct ApiError(StatusCode, &'static str, String);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::Stage(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::Input(_) => StatusCode::BAD_REQUEST,
            SessionError::Conflict { .. } => StatusCode::CONFLICT,
        };
        ApiError(status, e.kind(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": { "kind": self.1, "message": self.2 } }))).into_response()
    }
}

fn not_found(what: String) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, "not-found", what)
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, "input", msg.into())
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/commands", post(post_command))
        .route("/sessions/{id}/slice", get(get_slice))
        .route("/sessions/{id}/meshes/{kind}", get(get_mesh))
        .route("/sessions/{id}/contours", get(get_contours))
        .route("/sessions/{id}/plan", get(get_plan))
        .fallback(get(static_asset))
        .with_state(state)
}

/// Serves until ctrl-c, then lets in-flight requests finish.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

async fn handle(app: &AppState, id: &str) -> ApiResult<Arc<SessionHandle>> {
    app.sessions.read().await.get(id).cloned().ok_or_else(|| not_found(format!("no session {id:?}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    #[serde(default)]
    config: Option<TemplateConfig>,
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let req: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession { config: None }
    } else {
        serde_json::from_slice(&body).map_err(|e| bad_request(format!("invalid body: {e}")))?
    };
    let id = uuid::Uuid::new_v4().to_string();
    let session = Session::new(id.clone(), req.config.unwrap_or_else(|| app.config.clone()))?;
    let state = session.state();
    let handle = Arc::new(SessionHandle { state: RwLock::new(session), commit: Mutex::new(()) });
    app.sessions.write().await.insert(id, handle);
    Ok((StatusCode::CREATED, Json(state)).into_response())
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let h = handle(&app, &id).await?;
    let state = h.state.read().await.state();
    Ok(Json(state))
}

async fn post_command(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let h = handle(&app, &id).await?;
    let envelope: Envelope = serde_json::from_slice(&body).map_err(|e| bad_request(format!("invalid command envelope: {e}")))?;
    let command = envelope.command()?;
    if let Command::ExportPlan { path } = &command {
        let session = h.state.read().await;
        return Ok(Json(session.export(path.as_deref())?));
    }
    let _commit = h.commit.lock().await;
    let snapshot = {
        let mut s = h.state.write().await;
        if s.revision() != envelope.revision {
            return Err(SessionError::Conflict { current: s.revision(), got: envelope.revision }.into());
        }
        s.set_busy(Some(command.name()));
        s.clone()
    };
    let outcome = tokio::task::spawn_blocking(move || {
        let mut next = snapshot;
        let delta = next.apply(envelope.revision, &command);
        (next, delta)
    })
    .await;
    let mut s = h.state.write().await;
    match outcome {
        Ok((next, Ok(delta))) => {
            *s = next;
            Ok(Json(delta))
        }
        Ok((_, Err(e))) => {
            s.set_busy(None);
            Err(e.into())
        }
        Err(e) => {
            s.set_busy(None);
            Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))
        }
    }
}

#[derive(Deserialize)]
struct SliceQuery {
    axis: String,
    index: usize,
    window: Option<f64>,
    level: Option<f64>,
}

fn parse_axis(s: &str) -> ApiResult<Axis> {
    Axis::parse(s).ok_or_else(|| bad_request(format!("unknown axis {s:?} (axial, sagittal or coronal)")))
}

async fn get_slice(State(app): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<SliceQuery>) -> ApiResult<Response> {
    let axis = parse_axis(&q.axis)?;
    let h = handle(&app, &id).await?;
    let png = h.state.read().await.slice_png(axis, q.index, q.window, q.level)?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn get_mesh(State(app): State<Arc<AppState>>, Path((id, kind)): Path<(String, String)>) -> ApiResult<Json<MeshJson>> {
    let h = handle(&app, &id).await?;
    let mesh = h.state.read().await.mesh(&kind)?;
    Ok(Json(MeshJson::from(&mesh)))
}

#[derive(Deserialize)]
struct ContourQuery {
    axis: String,
    index: usize,
}

async fn get_contours(State(app): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<ContourQuery>) -> ApiResult<Json<Value>> {
    let axis = parse_axis(&q.axis)?;
    let h = handle(&app, &id).await?;
    let contours = h.state.read().await.contours(axis, q.index)?;
    Ok(Json(contours))
}

async fn get_plan(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let h = handle(&app, &id).await?;
    let bytes = h.state.read().await.export_bytes()?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

fn content_type(path: &FsPath) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("png") => "image/png",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

async fn static_asset(State(app): State<Arc<AppState>>, uri: Uri) -> ApiResult<Response> {
    let Some(root) = &app.static_dir else { return Err(not_found(uri.path().to_string())) };
    let rel = uri.path().trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel = FsPath::new(rel);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(not_found(uri.path().to_string()));
    }
    let path = root.join(rel);
    match tokio::fs::read(&path).await {
        Ok(bytes) => Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response()),
        Err(_) => Err(not_found(uri.path().to_string())),
    }
}
