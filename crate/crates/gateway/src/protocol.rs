//! Wire messages. Every WebSocket text frame carries one JSON envelope
//! `{type, session_id, seq, payload}`; the payload schema depends on the
//! type and unknown fields are rejected.

use std::collections::BTreeMap;
use std::fmt;

use earpiece_core::show::{Ballot, PerformerId, SessionState, VoteTally};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageType {
    ContextSubmit,
    Candidates,
    LineSelect,
    LineTyped,
    LineDeliver,
    LineSkip,
    SceneStart,
    SceneEnd,
    VoteSubmit,
    Tally,
    Error,
    Ack,
    State,
}

impl MessageType {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageType::ContextSubmit => "CONTEXT_SUBMIT",
            MessageType::Candidates => "CANDIDATES",
            MessageType::LineSelect => "LINE_SELECT",
            MessageType::LineTyped => "LINE_TYPED",
            MessageType::LineDeliver => "LINE_DELIVER",
            MessageType::LineSkip => "LINE_SKIP",
            MessageType::SceneStart => "SCENE_START",
            MessageType::SceneEnd => "SCENE_END",
            MessageType::VoteSubmit => "VOTE_SUBMIT",
            MessageType::Tally => "TALLY",
            MessageType::Error => "ERROR",
            MessageType::Ack => "ACK",
            MessageType::State => "STATE",
        }
    }
}

impl fmt::Display for MessageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    #[serde(rename = "type")]
    pub kind: MessageType,
    pub session_id: String,
    pub seq: u64,
    #[serde(default)]
    pub payload: Value,
}

impl Envelope {
    pub fn new(kind: MessageType, session_id: &str, seq: u64, payload: &impl Serialize) -> Self {
        Self {
            kind,
            session_id: session_id.to_string(),
            seq,
            payload: serde_json::to_value(payload).expect("payloads serialize"),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("envelopes serialize")
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn payload_as<T: DeserializeOwned>(&self) -> Result<T, serde_json::Error> {
        // a missing payload reads as an empty object
        let value = if self.payload.is_null() {
            Value::Object(Default::default())
        } else {
            self.payload.clone()
        };
        serde_json::from_value(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    BadMessage,
    RoleForbidden,
    SeqGap,
    WrongSession,
    NotFound,
    State,
    Timeout,
    Internal,
}

// ---- client to server ---------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextSubmit {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSelect {
    pub set_id: u64,
    /// 1-based positions in the presented list, delivered in this order.
    #[serde(default)]
    pub positions: Vec<usize>,
    /// Drop the whole set instead of selecting.
    #[serde(default)]
    pub discard: bool,
    #[serde(default)]
    pub performer: Option<PerformerId>,
    #[serde(default)]
    pub interrupting: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineTyped {
    pub text: String,
    #[serde(default)]
    pub performer: Option<PerformerId>,
    #[serde(default)]
    pub interrupting: bool,
    /// How long the operator spent typing; the line counts as created that
    /// long before it arrived.
    #[serde(default)]
    pub composed_ms: Option<u64>,
}

/// Sent by a performer device once a delivered line has been spoken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpokenAck {
    pub utterance_id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSkip {
    pub utterance_id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneStart {
    pub suggestion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneEnd {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoteSubmit {
    pub guesses: Ballot,
}

/// A validated inbound message.
#[derive(Debug, Clone, PartialEq)]
pub enum Inbound {
    ContextSubmit(ContextSubmit),
    LineSelect(LineSelect),
    LineTyped(LineTyped),
    SpokenAck(SpokenAck),
    LineSkip(LineSkip),
    SceneStart(SceneStart),
    SceneEnd(SceneEnd),
    VoteSubmit(VoteSubmit),
}

impl Inbound {
    /// Checks the payload against the schema of the declared type.
    pub fn from_envelope(env: &Envelope) -> Result<Self, String> {
        let err = |e: serde_json::Error| format!("invalid {} payload: {e}", env.kind);
        Ok(match env.kind {
            MessageType::ContextSubmit => Inbound::ContextSubmit(env.payload_as().map_err(err)?),
            MessageType::LineSelect => Inbound::LineSelect(env.payload_as().map_err(err)?),
            MessageType::LineTyped => Inbound::LineTyped(env.payload_as().map_err(err)?),
            MessageType::LineDeliver => Inbound::SpokenAck(env.payload_as().map_err(err)?),
            MessageType::LineSkip => Inbound::LineSkip(env.payload_as().map_err(err)?),
            MessageType::SceneStart => Inbound::SceneStart(env.payload_as().map_err(err)?),
            MessageType::SceneEnd => Inbound::SceneEnd(env.payload_as().map_err(err)?),
            MessageType::VoteSubmit => Inbound::VoteSubmit(env.payload_as().map_err(err)?),
            other => return Err(format!("{other} is a server message")),
        })
    }

    pub fn kind(&self) -> MessageType {
        match self {
            Inbound::ContextSubmit(_) => MessageType::ContextSubmit,
            Inbound::LineSelect(_) => MessageType::LineSelect,
            Inbound::LineTyped(_) => MessageType::LineTyped,
            Inbound::SpokenAck(_) => MessageType::LineDeliver,
            Inbound::LineSkip(_) => MessageType::LineSkip,
            Inbound::SceneStart(_) => MessageType::SceneStart,
            Inbound::SceneEnd(_) => MessageType::SceneEnd,
            Inbound::VoteSubmit(_) => MessageType::VoteSubmit,
        }
    }
}

// ---- server to client ---------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateView {
    pub position: usize,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidatesPayload {
    pub set_id: u64,
    pub context: String,
    pub candidates: Vec<CandidateView>,
    pub generated: usize,
    pub filtered: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryStage {
    /// Waiting in the performer's queue; may still be skipped.
    Queued,
    /// Handed to the device to be spoken now.
    Delivered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineDeliverPayload {
    pub utterance_id: u64,
    pub text: String,
    pub stage: DeliveryStage,
    /// Whether the device should synthesize speech for this message.
    pub speak: bool,
    pub interrupting: bool,
    /// Queue position for queued lines, 0 being next.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkipNotice {
    pub utterance_id: u64,
    pub performer: PerformerId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneStartPayload {
    pub scene_id: u64,
    pub suggestion: String,
    pub started_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneEndPayload {
    pub scene_id: u64,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatePayload {
    pub state: SessionState,
    /// On-stage performer ids, listed once voting opens.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub performers: Vec<PerformerId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TallyPayload {
    pub tally: VoteTally,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AckPayload {
    pub ref_seq: u64,
    /// The message was already applied; nothing changed.
    #[serde(default)]
    pub duplicate: bool,
    /// Ids of lines this message queued.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub utterance_ids: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorPayload {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_seq: Option<u64>,
}

/// Documentation-grade listing of who may send what.
pub fn schema_summary() -> BTreeMap<&'static str, &'static str> {
    [
        ("CONTEXT_SUBMIT", "CEO controller -> server: {text}"),
        ("CANDIDATES", "server -> CEO controller: {set_id, context, candidates[{position, text, score}], generated, filtered}"),
        ("LINE_SELECT", "CEO controller -> server: {set_id, positions[], discard?, performer?, interrupting?}"),
        ("LINE_TYPED", "Puppet Master -> server: {text, performer?, interrupting?, composed_ms?}"),
        ("LINE_DELIVER", "server -> performer: {utterance_id, text, stage, speak, interrupting, position?}; performer -> server: {utterance_id} once spoken"),
        ("LINE_SKIP", "performer or controller -> server: {utterance_id}; server -> that performer: {utterance_id, performer}"),
        ("SCENE_START", "host or controller -> server: {suggestion}; server -> everyone: {scene_id, suggestion, started_at}"),
        ("SCENE_END", "host or controller -> server: {}; server -> everyone: {scene_id, duration_ms}"),
        ("VOTE_SUBMIT", "audience -> server: {guesses{performer: role}}"),
        ("TALLY", "server -> everyone once voting closes: {tally}"),
        ("STATE", "server -> everyone on a state change: {state, performers?}"),
        ("ACK", "server -> sender: {ref_seq, duplicate, utterance_ids?}"),
        ("ERROR", "server -> sender: {code, message, ref_seq?}"),
    ]
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn envelope_round_trip() {
        let env = Envelope::new(MessageType::LineTyped, "s1", 3, &json!({"text": "hello there"}));
        let text = env.to_json();
        assert!(text.contains("\"type\":\"LINE_TYPED\""));
        let back = Envelope::parse(&text).unwrap();
        assert_eq!(back, env);
        match Inbound::from_envelope(&back).unwrap() {
            Inbound::LineTyped(t) => {
                assert_eq!(t.text, "hello there");
                assert!(!t.interrupting);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn payloads_are_strict() {
        let env = Envelope::new(MessageType::LineTyped, "s1", 1, &json!({"text": "x", "colour": "red"}));
        assert!(Inbound::from_envelope(&env).is_err());
        let env = Envelope::new(MessageType::ContextSubmit, "s1", 1, &json!({}));
        assert!(Inbound::from_envelope(&env).is_err());
        let env = Envelope::new(MessageType::Candidates, "s1", 1, &json!({}));
        assert!(Inbound::from_envelope(&env).is_err());
        assert!(Envelope::parse(r#"{"type":"NOPE","session_id":"s","seq":1,"payload":{}}"#).is_err());
        assert!(Envelope::parse(r#"{"type":"LINE_SKIP","session_id":"s","payload":{}}"#).is_err());
    }

    #[test]
    fn scene_end_takes_no_payload() {
        let env = Envelope::parse(r#"{"type":"SCENE_END","session_id":"s","seq":2}"#).unwrap();
        assert_eq!(Inbound::from_envelope(&env).unwrap(), Inbound::SceneEnd(SceneEnd {}));
    }

    #[test]
    fn vote_payload_uses_role_names() {
        let env = Envelope::new(MessageType::VoteSubmit, "s", 1, &json!({"guesses": {"ana": "CYBORG"}}));
        assert!(matches!(Inbound::from_envelope(&env), Ok(Inbound::VoteSubmit(_))));
        let env = Envelope::new(MessageType::VoteSubmit, "s", 1, &json!({"guesses": {"ana": "ROBOT"}}));
        assert!(Inbound::from_envelope(&env).is_err());
    }
}
