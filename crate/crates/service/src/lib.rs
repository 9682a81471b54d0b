//! Interactive solve sessions over HTTP.
//!
//! Each session runs the solver on its own thread against a
//! [`RemoteOracle`](ifcsp::RemoteOracle). Clients poll for the pending query
//! and post answers; both use the oracle's JSON schema with an `id` field
//! added.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | create from a problem or generator parameters |
//! | GET | `/sessions/{id}` | metadata, visible problem and state |
//! | GET | `/sessions/{id}/query` | pending query, or the current state |
//! | POST | `/sessions/{id}/answer` | answer the pending query |
//! | GET | `/sessions/{id}/progress` | counters, best solution so far, quality trace |
//! | GET | `/sessions/{id}/transcript` | resumable export |
//! | GET | `/sessions/{id}/verification` | check against a retained ground truth |
//! | DELETE | `/sessions/{id}` | abort |
//! | GET | `/healthz` | liveness |

mod session;

use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ifcsp::oracle::AnswerEnvelope;
use ifcsp::{generate, Exchange, GenParams, Ifcsp, OracleError, OracleQuery, ProblemKind, Strategy, TupleRef};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

pub use session::{NewSession, Registry, Session, SessionMeta, SessionState, Verification};

/// Default idle time before a session is aborted.
pub const DEFAULT_TTL: Duration = Duration::from_secs(30 * 60);

/// How long a request waits for the solver to reach its next query.
const SETTLE: Duration = Duration::from_millis(500);

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    fn not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "message": self.message }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Body of `POST /sessions`. Exactly one of `problem` and `gen` is given.
/// A `transcript` exported from an earlier session resumes it.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub strategy: String,
    #[serde(default)]
    pub problem: Option<Ifcsp>,
    #[serde(default)]
    pub gen: Option<GenParams>,
    /// Defaults to true for generated hard instances.
    #[serde(default)]
    pub hard: Option<bool>,
    /// Keep a generated instance's ground truth on the server for the
    /// verification endpoint. It is never sent to clients.
    #[serde(default)]
    pub keep_truth: bool,
    #[serde(default)]
    pub transcript: Vec<Exchange>,
}

/// Body of `GET /sessions/{id}/transcript`; can be posted back to
/// `/sessions` to resume.
#[derive(Debug, Clone, Serialize)]
pub struct TranscriptExport {
    pub strategy: Strategy,
    pub hard: bool,
    pub problem: Ifcsp,
    pub transcript: Vec<Exchange>,
}

#[derive(Serialize)]
struct StateView<'a> {
    #[serde(flatten)]
    meta: &'a SessionMeta,
    #[serde(flatten)]
    state: SessionState,
    #[serde(skip_serializing_if = "Option::is_none")]
    cells: Option<Vec<CellView>>,
}

/// A queried tuple spelled out for a person.
#[derive(Debug, Clone, Serialize)]
pub struct CellView {
    pub tuple: TupleRef,
    /// `(variable, value)` pairs of the tuple.
    pub assignment: Vec<(usize, usize)>,
    /// What the solver currently knows about it.
    pub entry: ifcsp::PreferenceEntry,
}

fn describe(problem: &Ifcsp, query: &OracleQuery) -> Vec<CellView> {
    query
        .examined()
        .iter()
        .map(|&t| CellView { tuple: t, assignment: problem.tuple_values(t), entry: problem.entry(t) })
        .collect()
}

fn view(session: &Session, state: SessionState) -> Value {
    // Show the cells against the problem as the solver currently sees it.
    let cells = match &state {
        SessionState::AwaitingAnswer { query } => {
            let mut current = session.problem.clone();
            for e in session.transcript() {
                apply(&mut current, &e);
            }
            Some(describe(&current, &query.query))
        }
        _ => None,
    };
    serde_json::to_value(StateView { meta: &session.meta, state, cells }).expect("serializable")
}

/// Folds an answered exchange into a view of the problem, for display only.
fn apply(p: &mut Ifcsp, e: &Exchange) {
    use ifcsp::OracleAnswer::*;
    match (&e.query, &e.answer) {
        (_, Revealed { values }) => {
            for c in values {
                let _ = p.reveal_in_place(c.tuple, c.value);
            }
        }
        (OracleQuery::RevealWorst { tuples, .. }, Worst { tuple, value }) => {
            let _ = p.reveal_in_place(*tuple, *value);
            for t in tuples {
                let _ = p.raise_floor(*t, *value);
            }
        }
        (OracleQuery::RevealWorst { tuples, known_min }, NoneWorse) => {
            for t in tuples {
                let _ = p.raise_floor(*t, *known_min);
            }
        }
        (_, ZeroAt { tuple }) => {
            let _ = p.reveal_in_place(*tuple, 0.0);
        }
        (OracleQuery::HasZero { tuples }, NoZero) => {
            for t in tuples {
                let _ = p.reveal_in_place(*t, 1.0);
            }
        }
        _ => {}
    }
}

fn lookup(registry: &Registry, id: &str) -> ApiResult<std::sync::Arc<Session>> {
    let session = registry.get(id).ok_or_else(|| ApiError::not_found(id))?;
    session.touch();
    Ok(session)
}

async fn settled(session: std::sync::Arc<Session>) -> SessionState {
    tokio::task::spawn_blocking(move || session.settle(SETTLE)).await.expect("settle does not panic")
}

async fn create(
    State(registry): State<Registry>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let Json(req) = body?;
    let strategy: Strategy = req
        .strategy
        .parse()
        .map_err(|e: ifcsp::SolveError| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "inconsistent_strategy", e.to_string()))?;
    let (problem, truth, hard) = match (req.problem, req.gen) {
        (Some(p), None) => (p, None, req.hard.unwrap_or(false)),
        (None, Some(params)) => {
            let g = generate(&params)
                .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_params", e.to_string()))?;
            let hard = req.hard.unwrap_or(params.kind == ProblemKind::Hard);
            (g.visible, req.keep_truth.then_some(g.truth), hard)
        }
        _ => {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "invalid_problem",
                "give exactly one of `problem` and `gen`",
            ))
        }
    };
    let session = registry.create(NewSession {
        problem,
        truth,
        strategy,
        hard,
        gen: req.gen,
        transcript: req.transcript,
    });
    let state = settled(session.clone()).await;
    Ok((StatusCode::CREATED, Json(view(&session, state))))
}

async fn show(State(registry): State<Registry>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = lookup(&registry, &id)?;
    let mut v = view(&session, session.state());
    v["problem"] = serde_json::to_value(&session.problem).expect("serializable");
    Ok(Json(v))
}

async fn query(State(registry): State<Registry>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = lookup(&registry, &id)?;
    Ok(Json(view(&session, session.state())))
}

async fn answer(
    State(registry): State<Registry>,
    Path(id): Path<String>,
    body: Result<Json<AnswerEnvelope>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let session = lookup(&registry, &id)?;
    let Json(envelope) = body.map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_answer", e.body_text()))?;
    match session.state() {
        SessionState::AwaitingAnswer { query } if query.id == envelope.id => {}
        SessionState::AwaitingAnswer { query } => {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "stale_query",
                format!("query {} is not pending; the pending query is {}", envelope.id, query.id),
            ))
        }
        state => {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "stale_query",
                format!("query {} is not pending; the session is {}", envelope.id, state.name()),
            ))
        }
    }
    session.submit(envelope.id, envelope.answer).map_err(|e| match e {
        OracleError::Closed => ApiError::new(StatusCode::CONFLICT, "closed", e.to_string()),
        OracleError::OutOfRange(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "out_of_range", e.to_string()),
        _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_answer", e.to_string()),
    })?;
    let state = settled(session.clone()).await;
    let mut v = view(&session, state);
    v["accepted"] = json!(true);
    Ok(Json(v))
}

async fn progress(State(registry): State<Registry>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = lookup(&registry, &id)?;
    let p = session.progress();
    Ok(Json(json!({
        "id": session.meta.id,
        "state": session.state().name(),
        "elicited": p.ledger.elicited,
        "effort": p.ledger.effort,
        "examinations": p.ledger.examinations,
        "queries": p.ledger.queries,
        "missing_initial": session.problem.num_incomplete(),
        "best_pref": p.best_pref,
        "best_sol": p.best_sol,
        "quality_trace": p.quality_trace,
    })))
}

async fn transcript(State(registry): State<Registry>, Path(id): Path<String>) -> ApiResult<Json<TranscriptExport>> {
    let session = lookup(&registry, &id)?;
    Ok(Json(TranscriptExport {
        strategy: session.meta.strategy,
        hard: session.meta.hard,
        problem: session.problem.clone(),
        transcript: session.transcript(),
    }))
}

async fn verification(State(registry): State<Registry>, Path(id): Path<String>) -> ApiResult<Json<Verification>> {
    let session = lookup(&registry, &id)?;
    if !session.meta.truth_retained {
        return Err(ApiError::new(StatusCode::NOT_FOUND, "no_truth", "the session keeps no ground truth"));
    }
    let session2 = session.clone();
    let result = tokio::task::spawn_blocking(move || session2.verification()).await.expect("no panic");
    result.map(Json).ok_or_else(|| {
        ApiError::new(StatusCode::CONFLICT, "not_done", format!("the session is {}", session.state().name()))
    })
}

async fn abort(State(registry): State<Registry>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = lookup(&registry, &id)?;
    session.abort("aborted by client");
    Ok(Json(view(&session, session.state())))
}

async fn healthz(State(registry): State<Registry>) -> Json<Value> {
    Json(json!({ "status": "ok", "sessions": registry.len() }))
}

pub fn router(registry: Registry) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show).delete(abort))
        .route("/sessions/{id}/query", get(query))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/progress", get(progress))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/sessions/{id}/verification", get(verification))
        .layer(CorsLayer::permissive())
        .with_state(registry)
}

/// Periodically aborts idle sessions.
pub fn spawn_reaper(registry: Registry) -> tokio::task::JoinHandle<()> {
    let every = (registry.ttl / 10).clamp(Duration::from_millis(10), Duration::from_secs(30));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            registry.reap(Instant::now());
        }
    })
}

/// Serves the API on `listener` until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, ttl: Duration) -> std::io::Result<()> {
    let registry = Registry::new(ttl);
    spawn_reaper(registry.clone());
    axum::serve(listener, router(registry)).await
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/service.md")]
mod guide {}
