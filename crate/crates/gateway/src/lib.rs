//! Session server for earpiece-fed improv shows: the wire protocol, the
//! per-session event loop with its append-only log, the HTTP/WebSocket
//! front end and the helpers behind the `earpiece` command.

pub mod auth;
pub mod config;
pub mod demo;
pub mod host;
pub mod ingest;
pub mod protocol;
pub mod replay;
pub mod server;
pub mod store;

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("unauthorized: {0}")]
    Unauthorized(String),
    #[error("forbidden: {0}")]
    Forbidden(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("{0}")]
    Data(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("timed out: {0}")]
    Timeout(String),
}

impl GatewayError {
    pub fn http_status(&self) -> u16 {
        match self {
            GatewayError::Unauthorized(_) => 401,
            GatewayError::Forbidden(_) => 403,
            GatewayError::NotFound(_) => 404,
            GatewayError::Conflict(_) => 409,
            GatewayError::BadRequest(_) | GatewayError::Data(_) => 400,
            GatewayError::Io(_) => 500,
            GatewayError::Timeout(_) => 504,
        }
    }
}

/// Milliseconds since the Unix epoch.
pub fn unix_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
