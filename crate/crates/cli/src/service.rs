//! JSON-over-HTTP endpoints. Readers work on a snapshot of the model;
//! session actions are serialised by the session mutex and publish a new
//! snapshot only once an accept has been applied in full.

use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use caption_core::model::Model;
use caption_core::parser::ParseError;
use caption_core::retrieval::{CaptionIndex, RetrievalError};
use caption_core::trainer::{ReviewSession, TrainError};

use crate::app::{self, ProposalView, SessionLock, Workspace, SCHEMA_VERSION};

pub struct Trainer {
    session: ReviewSession,
    _lock: SessionLock,
}

pub struct AppState {
    workspace: Workspace,
    model: RwLock<Arc<Model>>,
    index: Arc<CaptionIndex>,
    trainer: Mutex<Trainer>,
}

impl AppState {
    /// Takes the session lock for the data directory and replays any
    /// journal.
    pub fn open(workspace: Workspace) -> anyhow::Result<Arc<AppState>> {
        let lock = workspace.lock()?;
        let (model, session) = workspace.open_session(&lock)?;
        let index = workspace.load_index(&model)?;
        Ok(Arc::new(AppState {
            workspace,
            model: RwLock::new(Arc::new(model)),
            index: Arc::new(index),
            trainer: Mutex::new(Trainer { session, _lock: lock }),
        }))
    }

    fn snapshot(&self) -> Arc<Model> {
        self.model.read().expect("model lock poisoned").clone()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/parse", post(parse))
        .route("/query", post(query))
        .route("/session/next", get(next))
        .route("/session/accept", post(accept))
        .route("/session/reject", post(reject))
        .route("/session/skip", post(skip))
        .route("/stats", get(stats))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    diagnostic: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl ToString) -> ApiError {
        ApiError {
            status,
            message: message.to_string(),
            diagnostic: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "schema_version": SCHEMA_VERSION, "error": self.message });
        if let Some(d) = self.diagnostic {
            body["diagnostic"] = d;
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        let status = match e {
            ParseError::EmptyInput | ParseError::ZeroRequested => StatusCode::BAD_REQUEST,
            ParseError::NoParse { .. } | ParseError::OracleCap { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ParseError::Counts(_) | ParseError::Malformed(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let diagnostic = match e {
            ParseError::NoParse { tokens, longest_prefix } => Some(json!({ "tokens": tokens, "longest_prefix": longest_prefix })),
            _ => None,
        };
        ApiError {
            status,
            message: e.to_string(),
            diagnostic,
        }
    }
}

impl From<RetrievalError> for ApiError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::Query(p) => p.into(),
            RetrievalError::ZeroK | RetrievalError::EmptyText(_) => ApiError::new(StatusCode::BAD_REQUEST, e),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, other),
        }
    }
}

impl From<TrainError> for ApiError {
    fn from(e: TrainError) -> Self {
        let status = match e {
            TrainError::NoProposal => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e)
    }
}

impl From<anyhow::Error> for ApiError {
    fn from(e: anyhow::Error) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("{e:#}"))
    }
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.body_text()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParseRequest {
    text: String,
    #[serde(default = "one")]
    n: usize,
}

fn one() -> usize {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryRequest {
    text: String,
    #[serde(default = "ten")]
    k: usize,
}

fn ten() -> usize {
    10
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ActionRequest {
    /// Token from the proposal being acted on; omitted means "current".
    token: Option<String>,
}

async fn parse(State(state): State<Arc<AppState>>, payload: Result<Json<ParseRequest>, JsonRejection>) -> Result<Json<Value>, ApiError> {
    let req = body(payload)?;
    let report = app::parse_report(&state.snapshot(), &req.text, req.n)?;
    Ok(Json(json!({ "schema_version": SCHEMA_VERSION, "result": report })))
}

async fn query(State(state): State<Arc<AppState>>, payload: Result<Json<QueryRequest>, JsonRejection>) -> Result<Json<Value>, ApiError> {
    let req = body(payload)?;
    if req.text.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "query text must not be empty"));
    }
    let hits = app::query_report(&state.snapshot(), &state.index, &req.text, req.k)?;
    Ok(Json(json!({ "schema_version": SCHEMA_VERSION, "hits": hits })))
}

async fn next(State(state): State<Arc<AppState>>) -> Result<Json<Value>, ApiError> {
    let mut trainer = state.trainer.lock().expect("session lock poisoned");
    let proposal = trainer.session.propose(&state.snapshot())?;
    let token = app::proposal_token(&trainer.session);
    Ok(Json(json!({
        "schema_version": SCHEMA_VERSION,
        "finished": proposal.is_none(),
        "token": token,
        "proposal": proposal.map(ProposalView::from),
        "counters": trainer.session.counters(),
    })))
}

fn action_request(raw: &Bytes) -> Result<ActionRequest, ApiError> {
    if raw.iter().all(u8::is_ascii_whitespace) {
        return Ok(ActionRequest::default());
    }
    serde_json::from_slice(raw).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e))
}

fn check_token(trainer: &Trainer, req: &ActionRequest) -> Result<(), ApiError> {
    let current = app::proposal_token(&trainer.session);
    if current.is_none() {
        return Err(TrainError::NoProposal.into());
    }
    match &req.token {
        Some(t) if Some(t) != current.as_ref() => Err(ApiError::new(
            StatusCode::CONFLICT,
            format!("proposal `{t}` is no longer current"),
        )),
        _ => Ok(()),
    }
}

async fn accept(State(state): State<Arc<AppState>>, raw: Bytes) -> Result<Json<Value>, ApiError> {
    let req = action_request(&raw)?;
    let mut trainer = state.trainer.lock().expect("session lock poisoned");
    check_token(&trainer, &req)?;
    let mut model = (*state.snapshot()).clone();
    let mut session = trainer.session.clone();
    let decision = session.accept(&mut model)?;
    state.workspace.save_session(&model, &session)?;
    trainer.session = session;
    *state.model.write().expect("model lock poisoned") = Arc::new(model);
    Ok(Json(json!({
        "schema_version": SCHEMA_VERSION,
        "decision": decision,
        "counters": trainer.session.counters(),
    })))
}

async fn reject(State(state): State<Arc<AppState>>, raw: Bytes) -> Result<Json<Value>, ApiError> {
    let req = action_request(&raw)?;
    let mut trainer = state.trainer.lock().expect("session lock poisoned");
    check_token(&trainer, &req)?;
    let rank = trainer.session.reject()?;
    Ok(Json(json!({ "schema_version": SCHEMA_VERSION, "next_rank": rank })))
}

async fn skip(State(state): State<Arc<AppState>>, raw: Bytes) -> Result<Json<Value>, ApiError> {
    let req = action_request(&raw)?;
    let mut trainer = state.trainer.lock().expect("session lock poisoned");
    check_token(&trainer, &req)?;
    let mut session = trainer.session.clone();
    let decision = session.skip()?;
    state.workspace.save_session(&state.snapshot(), &session)?;
    trainer.session = session;
    Ok(Json(json!({
        "schema_version": SCHEMA_VERSION,
        "decision": decision,
        "counters": trainer.session.counters(),
    })))
}

async fn stats(State(state): State<Arc<AppState>>) -> Json<Value> {
    let model = state.snapshot();
    let trainer = state.trainer.lock().expect("session lock poisoned");
    let s = &trainer.session;
    Json(json!({
        "schema_version": SCHEMA_VERSION,
        "counters": s.counters(),
        "first_try_accuracy": s.counters().first_try_accuracy(),
        "cursor": s.cursor(),
        "corpus_size": s.corpus_len(),
        "finished": s.is_finished(),
        "store": app::store_stats(&model),
        "indexed_captions": state.index.len(),
    }))
}
