//! The show session: roster, scenes, per-performer delivery queues, voting
//! and transcripts. Every mutation is an event appended to the session log,
//! and replaying that log rebuilds the session exactly.

mod latency;
mod session;
mod transcript;
mod types;
mod voting;

pub use latency::{median, LatencyStats, UtteranceLatency};
pub use session::{DeliveryRecord, LoggedEvent, SceneSummary, ShowEvent, ShowSession};
pub use transcript::{
    Manifest, Transcript, TranscriptConfig, TranscriptError, TranscriptScene, TranscriptUtterance, TranscriptVote,
};
pub use types::{
    Ballot, LineDraft, PerformerId, Role, RoleKind, Scene, SessionState, ShowConfig, Utterance, UtteranceStatus,
};
pub use voting::{misidentification_rate, tally, PerformerTally, ShowBallots, VoteTally};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShowError {
    #[error("session is {actual}, expected {expected}")]
    WrongState {
        expected: &'static str,
        actual: SessionState,
    },
    #[error("performer `{0}` already has a role")]
    DuplicatePerformer(String),
    #[error("no more than {limit} {kind} allowed")]
    RoleLimit { kind: RoleKind, limit: usize },
    #[error("roster cannot go live: {0}")]
    RosterIncomplete(String),
    #[error("a scene is already open")]
    SceneAlreadyOpen,
    #[error("no scene is open")]
    NoOpenScene,
    #[error("unknown performer `{0}`")]
    UnknownPerformer(String),
    #[error("performer `{0}` does not take fed lines")]
    CannotReceiveLines(String),
    #[error("unknown utterance {0}")]
    UnknownUtterance(u64),
    #[error("utterance {id} is {status}, expected {expected}")]
    WrongLineStatus {
        id: u64,
        status: UtteranceStatus,
        expected: UtteranceStatus,
    },
    #[error("utterance {0} was already acknowledged")]
    AlreadySpoken(u64),
    #[error("voter `{0}` already cast a ballot")]
    DuplicateBallot(String),
    #[error("invalid ballot: {0}")]
    InvalidBallot(String),
    #[error("event log is inconsistent at seq {seq}: {msg}")]
    CorruptLog { seq: u64, msg: String },
}
