//! A real server on a loopback port plus minimal HTTP and WebSocket clients.

#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use earpiece_core::curation::Blocklist;
use earpiece_core::fixtures;
use earpiece_core::textgen::LanguageBackend;
use earpiece_gateway::auth::TokenIssuer;
use earpiece_gateway::config::GatewayConfig;
use earpiece_gateway::demo::bundled_model;
use earpiece_gateway::ingest::ModelDescriptor;
use earpiece_gateway::protocol::{Envelope, MessageType};
use earpiece_gateway::server::{spawn, AppState};
use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

pub struct Server {
    pub addr: SocketAddr,
    pub http: reqwest::Client,
}

pub async fn start(config: GatewayConfig) -> Server {
    let model = bundled_model();
    let descriptor = ModelDescriptor::of(&model);
    start_with(config, Arc::new(model), descriptor).await
}

pub async fn start_with(config: GatewayConfig, backend: Arc<dyn LanguageBackend>, descriptor: ModelDescriptor) -> Server {
    let log_dir = config.log_dir.clone();
    let state = Arc::new(AppState::new(
        config,
        backend,
        descriptor,
        Arc::new(Blocklist::parse(fixtures::BLOCKLIST)),
        TokenIssuer::Random,
    ));
    if let Some(dir) = log_dir {
        state.recover_sessions(&dir).unwrap();
    }
    let addr = spawn("127.0.0.1:0".parse().unwrap(), state).await.unwrap();
    Server {
        addr,
        http: reqwest::Client::new(),
    }
}

impl Server {
    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    pub async fn post(&self, path: &str, token: Option<&str>, body: Value) -> (u16, Value) {
        let mut req = self.http.post(self.url(path)).json(&body);
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap_or(Value::Null))
    }

    pub async fn get(&self, path: &str, token: &str) -> (u16, Value) {
        let resp = self.http.get(self.url(path)).bearer_auth(token).send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap_or(Value::Null))
    }

    pub async fn connect(&self, session: &str, token: &str) -> Client {
        let url = format!("ws://{}/sessions/{session}/stream?token={token}", self.addr);
        let (ws, _) = connect_async(url).await.unwrap();
        Client {
            ws,
            session: session.to_string(),
            seq: 0,
            seen: Vec::new(),
        }
    }
}

/// Tokens of a freshly registered show, still in setup.
pub struct Show {
    pub id: String,
    pub host: String,
    pub ana: String,
    pub ben: String,
    pub cleo: String,
    pub eve: String,
    pub finn: String,
    pub seats: Vec<String>,
}

pub async fn setup_show(server: &Server, seats: usize) -> Show {
    let (status, created) = server.post("/sessions", None, json!({})).await;
    assert_eq!(status, 200);
    let id = created["session_id"].as_str().unwrap().to_string();
    let host = created["host_token"].as_str().unwrap().to_string();
    let member = async |performer: &str, kind: &str| {
        let (status, v) = server
            .post(&format!("/sessions/{id}/roles"), Some(&host), json!({ "performer": performer, "kind": kind }))
            .await;
        assert_eq!(status, 200, "{v}");
        v["token"].as_str().unwrap().to_string()
    };
    let ana = member("ana", "CYBORG").await;
    let ben = member("ben", "PUPPET").await;
    let cleo = member("cleo", "FREE_WILL").await;
    let eve = member("eve", "CEO_CONTROLLER").await;
    let finn = member("finn", "PUPPET_MASTER").await;
    let mut tokens = Vec::new();
    for _ in 0..seats {
        let (status, v) = server.post(&format!("/sessions/{id}/audience"), None, json!({})).await;
        assert_eq!(status, 200);
        tokens.push(v["token"].as_str().unwrap().to_string());
    }
    Show {
        id,
        host,
        ana,
        ben,
        cleo,
        eve,
        finn,
        seats: tokens,
    }
}

pub async fn transition(server: &Server, show: &Show, action: &str) {
    let (status, v) = server
        .post(&format!("/sessions/{}/state", show.id), Some(&show.host), json!({ "action": action }))
        .await;
    assert_eq!(status, 200, "{v}");
}

pub struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    session: String,
    pub seq: u64,
    /// Every frame received so far, raw.
    pub seen: Vec<String>,
}

impl Client {
    pub async fn send(&mut self, kind: MessageType, payload: Value) -> u64 {
        self.seq += 1;
        let frame = Envelope::new(kind, &self.session, self.seq, &payload).to_json();
        self.send_raw(&frame).await;
        self.seq
    }

    pub async fn send_raw(&mut self, frame: &str) {
        self.ws.send(Message::text(frame)).await.unwrap();
    }

    /// Next envelope, or `None` if nothing arrives within `wait`.
    pub async fn recv(&mut self, wait: Duration) -> Option<Envelope> {
        loop {
            let msg = tokio::time::timeout(wait, self.ws.next()).await.ok()??.ok()?;
            if let Message::Text(text) = msg {
                self.seen.push(text.to_string());
                return Some(Envelope::parse(&text).unwrap());
            }
        }
    }

    /// Skips frames until one of `kind` arrives.
    pub async fn recv_kind(&mut self, kind: MessageType, wait: Duration) -> Option<Envelope> {
        let deadline = tokio::time::Instant::now() + wait;
        loop {
            let left = deadline.saturating_duration_since(tokio::time::Instant::now());
            let env = self.recv(left).await?;
            if env.kind == kind {
                return Some(env);
            }
        }
    }

    /// Everything that arrives within `wait`.
    pub async fn drain(&mut self, wait: Duration) -> Vec<Envelope> {
        let mut out = Vec::new();
        while let Some(env) = self.recv(wait).await {
            out.push(env);
        }
        out
    }
}
