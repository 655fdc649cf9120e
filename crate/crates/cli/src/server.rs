//! HTTP review API over a harvested run.
//!
//! All decision writes go through one mutex; each is persisted to
//! `decisions.json` (temp file + rename) before the in-memory session
//! changes, so a crash leaves either the old or the new log on disk.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use axum::body::Body;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use catalog_core::artifacts::{RunArtifacts, DECISIONS_FILE};
use catalog_core::review::{
    self, ActionKind, DecisionLog, FieldError, LogEntry, ReviewError, ReviewSession,
};
use serde_json::{json, Value};
use tokio::sync::Mutex;

pub struct AppState {
    run: RunArtifacts,
    decisions_path: PathBuf,
    session: Mutex<ReviewSession>,
}

impl AppState {
    /// Loads the run and replays any existing decision log.
    pub fn load(run_dir: &Path) -> anyhow::Result<Self> {
        let run = RunArtifacts::load(run_dir)
            .with_context(|| format!("loading run {}", run_dir.display()))?;
        let decisions_path = run_dir.join(DECISIONS_FILE);
        let log = DecisionLog::load_or_default(&decisions_path)?;
        let session = ReviewSession::replay(&run, &log)
            .map_err(|e| anyhow::anyhow!("replaying {}: {e}", decisions_path.display()))?;
        Ok(AppState {
            run,
            decisions_path,
            session: Mutex::new(session),
        })
    }
}

pub fn router(state: Arc<AppState>, ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/session", get(get_session))
        .route("/api/pairs", get(get_pairs).post(create_pair))
        .route("/api/pairs/:id/decision", post(post_decision))
        .route("/api/unmatched", get(get_unmatched))
        .route("/api/blocks", get(get_blocks))
        .route("/api/page/:id/image", get(get_page_image))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(run_dir: &Path, bind: SocketAddr, ui_dir: Option<&Path>) -> anyhow::Result<()> {
    let state = Arc::new(AppState::load(run_dir)?);
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .with_context(|| format!("binding {bind}"))?;
    log::info!("review API listening on {bind}");
    axum::serve(listener, router(state, ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn unprocessable(errors: Vec<FieldError>) -> Response {
    (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "errors": errors }))).into_response()
}

fn field_error(field: &str, message: &str) -> FieldError {
    FieldError {
        field: field.into(),
        message: message.into(),
    }
}

fn review_error(e: ReviewError) -> Response {
    match e {
        ReviewError::UnknownPairs(ids) => (
            StatusCode::NOT_FOUND,
            Json(json!({ "errors": [{ "field": "pair_id", "message": format!("unknown pair {}", ids.join(", ")) }] })),
        )
            .into_response(),
        ReviewError::Invalid(errs) => unprocessable(errs),
    }
}

fn session_json(s: &ReviewSession) -> Value {
    json!({
        "session_id": s.session_id,
        "counts": s.status_counts(),
        "pairs": s.pairs,
        "unmatched": s.unmatched,
        "audit": s.audit,
    })
}

async fn get_session(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(session_json(&*state.session.lock().await))
}

async fn get_pairs(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "pairs": state.session.lock().await.pairs }))
}

async fn get_unmatched(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "unmatched": state.session.lock().await.unmatched }))
}

async fn get_blocks(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "blocks": state.run.blocks.blocks }))
}

async fn get_page_image(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Response {
    let Some(page) = state.run.page(&id) else {
        return (StatusCode::NOT_FOUND, format!("unknown page {id}")).into_response();
    };
    match tokio::fs::read(&page.image_ref).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, "image/png")], Body::from(bytes)).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

/// Validates the payload shape by hand so every problem is reported per field.
fn parse_decision(body: &Value) -> Result<(ActionKind, Option<String>), Vec<FieldError>> {
    let Some(obj) = body.as_object() else {
        return Err(vec![field_error("body", "expected a JSON object")]);
    };
    let mut errors = Vec::new();
    let action = match obj.get("action").and_then(Value::as_str) {
        Some("accept") => Some(ActionKind::Accept),
        Some("reject") => Some(ActionKind::Reject),
        Some("reassign") => Some(ActionKind::Reassign),
        Some(other) => {
            errors.push(field_error("action", &format!("unknown action {other:?}")));
            None
        }
        None => {
            errors.push(field_error("action", "required: accept | reject | reassign"));
            None
        }
    };
    let target = match obj.get("new_text_block_id") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            errors.push(field_error("new_text_block_id", "must be a string"));
            None
        }
    };
    if action == Some(ActionKind::Reassign) && target.is_none() && errors.is_empty() {
        errors.push(field_error("new_text_block_id", "required for reassign"));
    }
    match action {
        Some(a) if errors.is_empty() => Ok((a, target)),
        _ => Err(errors),
    }
}

/// Builds an entry under the session lock, applies it on a copy, persists the
/// resulting log, then commits.
async fn commit(
    state: &AppState,
    make_entry: impl FnOnce(&ReviewSession) -> LogEntry,
) -> Result<ReviewSession, Response> {
    let mut session = state.session.lock().await;
    let mut next = session.clone();
    let entry = make_entry(&session);
    next.apply(entry).map_err(review_error)?;
    let log = next.log();
    let path = state.decisions_path.clone();
    tokio::task::spawn_blocking(move || log.save_atomic(&path))
        .await
        .map_err(|e| (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response())?
        .map_err(|e| (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response())?;
    *session = next.clone();
    Ok(next)
}

async fn post_decision(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Option<Json<Value>>,
) -> Response {
    let Some(Json(body)) = body else {
        return unprocessable(vec![field_error("body", "expected a JSON object")]);
    };
    let (action, target) = match parse_decision(&body) {
        Ok(v) => v,
        Err(errs) => return unprocessable(errs),
    };
    let make_entry = |s: &ReviewSession| LogEntry {
        seq: s.next_seq(),
        timestamp: review::now_timestamp(),
        pair_id: id.clone(),
        action,
        new_text_block_id: target,
        image_block_id: None,
    };
    match commit(&state, make_entry).await {
        Ok(session) => Json(json!({
            "pair": session.pair(&id),
            "counts": session.status_counts(),
        }))
        .into_response(),
        Err(resp) => resp,
    }
}

async fn create_pair(State(state): State<Arc<AppState>>, body: Option<Json<Value>>) -> Response {
    let Some(Json(body)) = body else {
        return unprocessable(vec![field_error("body", "expected a JSON object")]);
    };
    let get = |k: &str| body.get(k).and_then(Value::as_str).map(str::to_string);
    let (image, text) = (get("image_block_id"), get("text_block_id"));
    let mut errors = Vec::new();
    if image.is_none() {
        errors.push(field_error("image_block_id", "required string"));
    }
    if text.is_none() {
        errors.push(field_error("text_block_id", "required string"));
    }
    if !errors.is_empty() {
        return unprocessable(errors);
    }
    let make_entry = |s: &ReviewSession| {
        let n_human = s.pairs.iter().filter(|p| p.id.starts_with("human-")).count();
        LogEntry {
            seq: s.next_seq(),
            timestamp: review::now_timestamp(),
            pair_id: format!("human-{n_human:04}"),
            action: ActionKind::Create,
            new_text_block_id: text,
            image_block_id: image,
        }
    };
    match commit(&state, make_entry).await {
        Ok(session) => {
            let created = session.pairs.last();
            (StatusCode::CREATED, Json(json!({ "pair": created }))).into_response()
        }
        Err(resp) => resp,
    }
}
