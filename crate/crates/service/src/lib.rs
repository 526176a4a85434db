//! Read-only HTTP facade over a loaded cube snapshot.
//!
//! Endpoints: `GET /schema`, `POST /query`, `POST /mine/rules`,
//! `POST /mine/sequences`, `POST /mine/outliers`, `GET /jobs/{id}`.
//! There is no authentication. Bodies are UTF-8 JSON; malformed bodies get
//! 400, well-formed requests naming unknown dimensions, members, measures or
//! bad thresholds get 422. Handler time is reported in the `x-elapsed-us`
//! header so payloads depend only on snapshot and request.

mod requests;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use incube::codebook::CodebookTables;
use incube::cube::{CellQuery, Snapshot, SnapshotError};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use requests::{
    answer_query, OutliersRequest, OutliersResponse, QueryResponse, RequestError, RulesRequest,
    SequencesRequest, DEFAULT_OUTLIER_THRESHOLD,
};

/// Mining runs over more incidents than this go to the job queue.
pub const ASYNC_INCIDENT_THRESHOLD: usize = 20_000;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JobStatus {
    Running,
    Done { result: serde_json::Value },
    Failed { error: String },
}

struct Inner {
    tables: &'static CodebookTables,
    snapshot: RwLock<Option<Arc<Snapshot>>>,
    source: Option<PathBuf>,
    jobs: Mutex<HashMap<u64, JobStatus>>,
    next_job: AtomicU64,
}

/// Shared service state. Cloning is cheap; all clones see the same snapshot.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(tables: &'static CodebookTables, snapshot: Option<Snapshot>) -> Self {
        Self::with_source(tables, snapshot, None)
    }

    /// State that can re-read `source` on [`AppState::reload`].
    pub fn with_source(tables: &'static CodebookTables, snapshot: Option<Snapshot>, source: Option<PathBuf>) -> Self {
        Self {
            inner: Arc::new(Inner {
                tables,
                snapshot: RwLock::new(snapshot.map(Arc::new)),
                source,
                jobs: Mutex::new(HashMap::new()),
                next_job: AtomicU64::new(1),
            }),
        }
    }

    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.inner.snapshot.read().expect("snapshot lock").clone()
    }

    /// Swap in a new snapshot. Requests already holding the old one finish
    /// on it.
    pub fn replace(&self, snapshot: Snapshot) {
        *self.inner.snapshot.write().expect("snapshot lock") = Some(Arc::new(snapshot));
    }

    pub fn reload(&self) -> Result<(), SnapshotError> {
        let Some(path) = &self.inner.source else { return Ok(()) };
        let snapshot = Snapshot::load(path, self.inner.tables)?;
        self.replace(snapshot);
        Ok(())
    }

    pub fn job(&self, id: u64) -> Option<JobStatus> {
        self.inner.jobs.lock().expect("job lock").get(&id).cloned()
    }

    fn start_job<T, F>(&self, work: F) -> u64
    where
        T: Serialize,
        F: FnOnce() -> Result<T, RequestError> + Send + 'static,
    {
        let id = self.inner.next_job.fetch_add(1, Ordering::Relaxed);
        self.inner.jobs.lock().expect("job lock").insert(id, JobStatus::Running);
        let state = self.clone();
        tokio::task::spawn_blocking(move || {
            let status = match work() {
                Ok(v) => JobStatus::Done { result: serde_json::to_value(v).expect("result serializes") },
                Err(e) => JobStatus::Failed { error: e.to_string() },
            };
            state.inner.jobs.lock().expect("job lock").insert(id, status);
        });
        id
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/schema", get(schema))
        .route("/query", post(query))
        .route("/mine/rules", post(mine_rules))
        .route("/mine/sequences", post(mine_sequences))
        .route("/mine/outliers", post(mine_outliers))
        .route("/jobs/{id}", get(job))
        .with_state(state)
}

/// Serve until the process is stopped. On Unix, SIGHUP reloads the
/// snapshot from its source path.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    #[cfg(unix)]
    {
        let state = state.clone();
        let mut hup = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::hangup())?;
        tokio::spawn(async move {
            while hup.recv().await.is_some() {
                match state.reload() {
                    Ok(()) => eprintln!("snapshot reloaded"),
                    Err(e) => eprintln!("reload failed, keeping current snapshot: {e}"),
                }
            }
        });
    }
    axum::serve(listener, router(state)).await
}

struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }
}

impl From<RequestError> for ApiError {
    fn from(e: RequestError) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json(self.status, &serde_json::json!({ "error": self.message }))
    }
}

fn json<T: Serialize>(status: StatusCode, body: &T) -> Response {
    let bytes = serde_json::to_vec(body).expect("response serializes");
    (status, [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))], bytes).into_response()
}

fn timed(started: Instant, mut response: Response) -> Response {
    let micros = started.elapsed().as_micros().to_string();
    if let Ok(v) = HeaderValue::from_str(&micros) {
        response.headers_mut().insert("x-elapsed-us", v);
    }
    response
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed request: {e}")))
}

fn loaded(state: &AppState) -> Result<Arc<Snapshot>, ApiError> {
    state.snapshot().ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no cube loaded"))
}

async fn schema(State(state): State<AppState>) -> Result<Response, ApiError> {
    let snapshot = loaded(&state)?;
    Ok(json(StatusCode::OK, &snapshot.table.schema()))
}

async fn query(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let started = Instant::now();
    let snapshot = loaded(&state)?;
    let q: CellQuery = parse(&body)?;
    let response = answer_query(&snapshot, &q)?;
    Ok(timed(started, json(StatusCode::OK, &response)))
}

/// Run inline, or queue and answer 202 with a job id.
fn dispatch<T, F>(state: &AppState, snapshot: &Snapshot, run_async: bool, work: F) -> Result<Response, ApiError>
where
    T: Serialize,
    F: FnOnce() -> Result<T, RequestError> + Send + 'static,
{
    if run_async || snapshot.incidents.len() > ASYNC_INCIDENT_THRESHOLD {
        let id = state.start_job(work);
        let body = serde_json::json!({ "job_id": id, "status_url": format!("/jobs/{id}") });
        return Ok(json(StatusCode::ACCEPTED, &body));
    }
    Ok(json(StatusCode::OK, &work()?))
}

async fn mine_rules(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let started = Instant::now();
    let snapshot = loaded(&state)?;
    let req: RulesRequest = parse(&body)?;
    let tables = state.inner.tables;
    let run_async = req.run_async;
    let snap = snapshot.clone();
    let response = dispatch(&state, &snapshot, run_async, move || req.answer(&snap, tables))?;
    Ok(timed(started, response))
}

async fn mine_sequences(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let started = Instant::now();
    let snapshot = loaded(&state)?;
    let req: SequencesRequest = parse(&body)?;
    let tables = state.inner.tables;
    let run_async = req.run_async;
    let snap = snapshot.clone();
    let response = dispatch(&state, &snapshot, run_async, move || req.answer(&snap, tables))?;
    Ok(timed(started, response))
}

async fn mine_outliers(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let started = Instant::now();
    let req: OutliersRequest = parse(&body)?;
    let response = match (&req.query, state.snapshot()) {
        (Some(_), None) => return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no cube loaded")),
        (_, Some(snapshot)) => req.answer(&snapshot)?,
        (None, None) => req.answer(&Snapshot::build(Vec::new(), state.inner.tables).expect("empty cube builds"))?,
    };
    Ok(timed(started, json(StatusCode::OK, &response)))
}

async fn job(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id: u64 = id.parse().map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "job id must be a number"))?;
    let status = state.job(id).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no job {id}")))?;
    let mut body = serde_json::to_value(status).expect("status serializes");
    body["id"] = id.into();
    Ok(json(StatusCode::OK, &body))
}
