//! HTTP and WebSocket front end. Each session sits behind one mutex, which
//! makes its host the single writer; connections only queue frames.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use earpiece_core::analytics::{
    compare_report, group_stats, parse_survey, parse_tagged, survey_aggregate, CiConfig, Resources, SurveyScale,
};
use earpiece_core::curation::Blocklist;
use earpiece_core::show::{RoleKind, ShowConfig};
use earpiece_core::textgen::LanguageBackend;
use futures::{SinkExt, StreamExt};
use parking_lot::Mutex;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::mpsc;

use crate::auth::TokenIssuer;
use crate::config::GatewayConfig;
use crate::host::{HostSettings, Outbound, ProposalOutcome, SessionHost, Step, Transition};
use crate::ingest::ModelDescriptor;
use crate::protocol::schema_summary;
use crate::replay::ShowSummary;
use crate::{unix_ms, GatewayError};

impl IntoResponse for GatewayError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

type Conn = (u64, mpsc::UnboundedSender<String>);

struct Slot {
    host: Mutex<SessionHost>,
    conns: Mutex<BTreeMap<String, Conn>>,
}

impl Slot {
    fn new(host: SessionHost) -> Arc<Self> {
        Arc::new(Self {
            host: Mutex::new(host),
            conns: Mutex::new(BTreeMap::new()),
        })
    }

    /// Queues frames on their connections. Called with the host locked, so
    /// each connection sees frames in sequence order.
    fn dispatch(&self, out: Vec<Outbound>) {
        let conns = self.conns.lock();
        for o in out {
            if let Some((_, tx)) = conns.get(&o.to) {
                let _ = tx.send(o.message.to_json());
            }
        }
    }

    fn now(host: &SessionHost) -> u64 {
        unix_ms().saturating_sub(host.created_unix_ms())
    }
}

pub struct AppState {
    config: GatewayConfig,
    backend: Arc<dyn LanguageBackend>,
    model: ModelDescriptor,
    blocklist: Arc<Blocklist>,
    issuer: Mutex<TokenIssuer>,
    sessions: Mutex<BTreeMap<String, Arc<Slot>>>,
    next_conn: AtomicU64,
}

impl AppState {
    pub fn new(
        config: GatewayConfig,
        backend: Arc<dyn LanguageBackend>,
        model: ModelDescriptor,
        blocklist: Arc<Blocklist>,
        issuer: TokenIssuer,
    ) -> Self {
        Self {
            config,
            backend,
            model,
            blocklist,
            issuer: Mutex::new(issuer),
            sessions: Mutex::new(BTreeMap::new()),
            next_conn: AtomicU64::new(1),
        }
    }

    fn settings(&self) -> HostSettings {
        (&self.config).into()
    }

    /// Reloads every session log found in `dir`.
    pub fn recover_sessions(&self, dir: &Path) -> Result<usize, GatewayError> {
        let entries = std::fs::read_dir(dir).map_err(|e| GatewayError::Io(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in &paths {
            let host = SessionHost::recover(
                path,
                self.settings(),
                Arc::clone(&self.backend),
                Arc::clone(&self.blocklist),
                self.issuer.lock().fork(),
            )?;
            tracing::info!(session = host.id(), path = %path.display(), "recovered session");
            self.sessions.lock().insert(host.id().to_string(), Slot::new(host));
        }
        Ok(paths.len())
    }

    pub fn create_session(&self, show: ShowConfig) -> Result<(String, String), GatewayError> {
        let issuer = self.issuer.lock().fork();
        let host = SessionHost::create(
            show,
            self.settings(),
            Arc::clone(&self.backend),
            Arc::clone(&self.blocklist),
            issuer,
            self.config.log_dir.as_deref(),
            unix_ms(),
        )?;
        let ids = (host.id().to_string(), host.host_token().to_string());
        self.sessions.lock().insert(ids.0.clone(), Slot::new(host));
        Ok(ids)
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, GatewayError> {
        self.sessions
            .lock()
            .get(id)
            .cloned()
            .ok_or_else(|| GatewayError::NotFound(format!("session {id}")))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/roles", post(register_member))
        .route("/sessions/{id}/audience", post(register_audience))
        .route("/sessions/{id}/state", get(state_view).post(transition))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/sessions/{id}/latency", get(latency))
        .route("/sessions/{id}/tally", get(tally))
        .route("/sessions/{id}/summary", get(summary))
        .route("/sessions/{id}/stream", get(stream))
        .route("/model", get(model))
        .route("/protocol", get(protocol))
        .route("/analyze", post(analyze))
        .route("/survey", post(survey))
        .with_state(state)
}

/// Binds and serves until the future resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// Starts a server on `addr` in the background and returns the bound address.
pub async fn spawn(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<SocketAddr> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let bound = listener.local_addr()?;
    tokio::spawn(async move {
        if let Err(e) = serve(listener, state, std::future::pending()).await {
            tracing::error!("server stopped: {e}");
        }
    });
    Ok(bound)
}

fn bearer(headers: &HeaderMap) -> Result<String, GatewayError> {
    headers
        .get("authorization")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(|t| t.trim().to_string())
        .ok_or_else(|| GatewayError::Unauthorized("missing bearer token".into()))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    #[serde(default)]
    show: Option<ShowConfig>,
}

async fn create_session(State(app): State<Arc<AppState>>, body: Option<Json<CreateSession>>) -> Result<Json<Value>, GatewayError> {
    let show = body.and_then(|Json(b)| b.show).unwrap_or(app.config.show);
    let (session_id, host_token) = app.create_session(show)?;
    Ok(Json(json!({ "session_id": session_id, "host_token": host_token })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterMember {
    performer: String,
    kind: RoleKind,
    /// Defaults to secret for the people on stage.
    #[serde(default)]
    secret: Option<bool>,
}

async fn register_member(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    Json(body): Json<RegisterMember>,
) -> Result<Json<Value>, GatewayError> {
    let token = bearer(&headers)?;
    let slot = app.slot(&id)?;
    let mut host = slot.host.lock();
    let now = Slot::now(&host);
    let secret = body.secret.unwrap_or(body.kind.on_stage());
    let member = host.register_member(&token, &body.performer, body.kind, secret, now)?;
    Ok(Json(json!({ "token": member, "performer": body.performer })))
}

async fn register_audience(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, GatewayError> {
    let slot = app.slot(&id)?;
    let mut host = slot.host.lock();
    let now = Slot::now(&host);
    let (token, seat) = host.register_audience(now)?;
    Ok(Json(json!({ "token": token, "seat": seat })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionBody {
    action: Transition,
}

async fn transition(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    Json(body): Json<TransitionBody>,
) -> Result<Json<Value>, GatewayError> {
    let token = bearer(&headers)?;
    let slot = app.slot(&id)?;
    let mut host = slot.host.lock();
    let now = Slot::now(&host);
    let (state, out) = host.transition(&token, body.action, now)?;
    slot.dispatch(out);
    Ok(Json(json!({ "state": state })))
}

async fn state_view(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> Result<Response, GatewayError> {
    let token = bearer(&headers)?;
    let slot = app.slot(&id)?;
    let view = slot.host.lock().state_view(&token)?;
    Ok(Json(view).into_response())
}

async fn transcript(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> Result<Response, GatewayError> {
    let token = bearer(&headers)?;
    let slot = app.slot(&id)?;
    let t = slot.host.lock().transcript(&token)?;
    Ok(([("content-type", "application/json")], t.to_json()).into_response())
}

async fn latency(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> Result<Response, GatewayError> {
    let token = bearer(&headers)?;
    let slot = app.slot(&id)?;
    let l = slot.host.lock().latency(&token)?;
    Ok(Json(l).into_response())
}

async fn tally(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> Result<Response, GatewayError> {
    let token = bearer(&headers)?;
    let slot = app.slot(&id)?;
    let t = slot.host.lock().tally(&token)?;
    Ok(Json(t).into_response())
}

async fn summary(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, headers: HeaderMap) -> Result<Response, GatewayError> {
    let token = bearer(&headers)?;
    let slot = app.slot(&id)?;
    // snapshot under the lock, analyse outside it
    let transcript = slot.host.lock().transcript(&token)?;
    let summary = tokio::task::spawn_blocking(move || {
        let session = transcript.replay().map_err(|e| GatewayError::Data(e.to_string()))?;
        Ok::<_, GatewayError>(ShowSummary::from_session(&session, Resources::bundled(), &CiConfig::default()))
    })
    .await
    .map_err(|e| GatewayError::Io(e.to_string()))??;
    Ok(Json(summary).into_response())
}

async fn model(State(app): State<Arc<AppState>>) -> Json<ModelDescriptor> {
    Json(app.model.clone())
}

async fn protocol() -> Json<Value> {
    Json(json!(schema_summary()))
}

async fn analyze(body: String) -> Result<Response, GatewayError> {
    let report = tokio::task::spawn_blocking(move || {
        let lines = parse_tagged(&body).map_err(|e| GatewayError::BadRequest(e.to_string()))?;
        let groups = group_stats(&lines, Resources::bundled(), &CiConfig::default());
        Ok::<_, GatewayError>(json!({ "report": compare_report(&groups), "groups": groups }))
    })
    .await
    .map_err(|e| GatewayError::Io(e.to_string()))??;
    Ok(Json(report).into_response())
}

async fn survey(State(app): State<Arc<AppState>>, body: String) -> Result<Response, GatewayError> {
    let scale = SurveyScale {
        min: app.config.show.scale_min,
        max: app.config.show.scale_max,
    };
    let report = tokio::task::spawn_blocking(move || {
        let responses = parse_survey(&body, scale).map_err(|e| GatewayError::BadRequest(e.to_string()))?;
        Ok::<_, GatewayError>(survey_aggregate(&responses, &CiConfig::default()))
    })
    .await
    .map_err(|e| GatewayError::Io(e.to_string()))??;
    Ok(Json(report).into_response())
}

#[derive(Debug, Deserialize)]
struct StreamQuery {
    token: String,
}

async fn stream(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<StreamQuery>,
    ws: WebSocketUpgrade,
) -> Result<Response, GatewayError> {
    let slot = app.slot(&id)?;
    if slot.host.lock().role_of(&q.token).is_none() {
        return Err(GatewayError::Unauthorized("unknown token".into()));
    }
    let conn_id = app.next_conn.fetch_add(1, Ordering::Relaxed);
    let timeout = Duration::from_millis(app.config.context_timeout_ms);
    Ok(ws.on_upgrade(move |socket| run_stream(socket, slot, q.token, conn_id, timeout)))
}

async fn run_stream(socket: WebSocket, slot: Arc<Slot>, token: String, conn_id: u64, timeout: Duration) {
    let (mut sink, mut source) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    let writer = tokio::spawn(async move {
        while let Some(text) = rx.recv().await {
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    {
        let mut host = slot.host.lock();
        // a newer connection for the same token replaces the old one
        slot.conns.lock().insert(token.clone(), (conn_id, tx));
        let now = Slot::now(&host);
        match host.connect(&token, now) {
            Ok(out) => slot.dispatch(out),
            Err(e) => tracing::warn!("connect failed: {e}"),
        }
    }

    while let Some(Ok(frame)) = source.next().await {
        let text = match frame {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        let step = {
            let mut host = slot.host.lock();
            let now = Slot::now(&host);
            match host.handle(&token, &text, now) {
                Step::Done(out) => {
                    slot.dispatch(out);
                    None
                }
                Step::Propose(job) => Some(job),
            }
        };
        if let Some(job) = step {
            let job = Arc::new(job);
            let worker = Arc::clone(&job);
            let outcome = match tokio::time::timeout(timeout, tokio::task::spawn_blocking(move || worker.run())).await {
                Ok(Ok(Ok(set))) => ProposalOutcome::Ready(set),
                Ok(Ok(Err(e))) => ProposalOutcome::Failed(e.to_string()),
                Ok(Err(e)) => ProposalOutcome::Failed(e.to_string()),
                Err(_) => ProposalOutcome::TimedOut,
            };
            let mut host = slot.host.lock();
            let now = Slot::now(&host);
            let out = host.finish_proposal(&job, outcome, now);
            slot.dispatch(out);
        }
    }

    {
        let mut host = slot.host.lock();
        let mut conns = slot.conns.lock();
        if conns.get(&token).is_some_and(|(id, _)| *id == conn_id) {
            conns.remove(&token);
            host.disconnect(&token);
        }
    }
    // the writer stops once its sender is gone
    drop(writer);
}
