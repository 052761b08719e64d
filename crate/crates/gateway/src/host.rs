//! One show's single-writer event loop. Every call checks its input against
//! a copy of the state, appends the resulting record to the session log and
//! only then swaps the copy in and releases outbound messages.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use earpiece_core::curation::{
    candidate_seed, propose, Blocklist, CandidateSet, CurationConfig, CurationError, Decision, ProposeRequest,
};
use earpiece_core::show::{
    LatencyStats, LineDraft, RoleKind, SessionState, ShowConfig, ShowError, ShowSession, Transcript, UtteranceStatus,
    VoteTally,
};
use earpiece_core::textgen::{tokenize, LanguageBackend, TopicSet};
use earpiece_core::Source;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::auth::{ClientRole, TokenIssuer};
use crate::config::GatewayConfig;
use crate::protocol::{
    AckPayload, CandidateView, CandidatesPayload, ContextSubmit, DeliveryStage, Envelope, ErrorCode, ErrorPayload,
    Inbound, LineDeliverPayload, LineSelect, LineSkip, LineTyped, MessageType, SceneEndPayload, SceneStart,
    SceneStartPayload, SkipNotice, SpokenAck, StatePayload, TallyPayload, VoteSubmit,
};
use crate::store::{Entry, LogFile, LogRecord};
use crate::GatewayError;

/// Words never used as topic seeds.
const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "he", "her", "his", "i", "in", "is", "it",
    "its", "me", "my", "of", "on", "or", "our", "she", "so", "that", "the", "their", "them", "they", "this", "to",
    "us", "was", "we", "were", "with", "you", "your",
];

/// Topic seeds taken from an audience suggestion.
pub fn suggestion_seeds(suggestion: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    tokenize(suggestion)
        .into_iter()
        .filter(|t| t.is_word() && !STOPWORDS.contains(&t.surface()))
        .map(|t| t.into_surface())
        .filter(|w| seen.insert(w.clone()))
        .collect()
}

/// Parts of the server configuration a session needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HostSettings {
    pub seed: u64,
    pub curation: CurationConfig,
    pub topic_size: usize,
    pub topic_bonus: f64,
    pub fsync: bool,
}

impl From<&GatewayConfig> for HostSettings {
    fn from(c: &GatewayConfig) -> Self {
        Self {
            seed: c.seed,
            curation: c.curation,
            topic_size: c.topic_size,
            topic_bonus: c.topic_bonus,
            fsync: c.fsync,
        }
    }
}

impl Default for HostSettings {
    fn default() -> Self {
        (&GatewayConfig::default()).into()
    }
}

/// A message for one connected client.
#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub to: String,
    pub message: Envelope,
}

#[derive(Debug, Clone, PartialEq)]
struct ClientEntry {
    role: ClientRole,
    last_seq: u64,
}

#[derive(Debug, Clone)]
struct HostState {
    show: ShowSession,
    clients: BTreeMap<String, ClientEntry>,
    sets: BTreeMap<u64, CandidateSet>,
    topic: TopicSet,
    next_set_id: u64,
    next_seat: u64,
    out_seq: u64,
    records: u64,
}

/// Work in progress on a copy of the state.
struct Txn {
    state: HostState,
    entries: Vec<Entry>,
    show_mark: usize,
    msgs: Vec<(String, MessageType, Value)>,
}

impl Txn {
    fn new(state: &HostState) -> Self {
        Self {
            show_mark: state.show.log().len(),
            state: state.clone(),
            entries: Vec::new(),
            msgs: Vec::new(),
        }
    }

    fn send(&mut self, to: &str, kind: MessageType, payload: &impl Serialize) {
        self.msgs
            .push((to.to_string(), kind, serde_json::to_value(payload).expect("payloads serialize")));
    }
}

type Rejection = (ErrorCode, String);

fn show_rejection(e: ShowError) -> Rejection {
    let code = match e {
        ShowError::UnknownPerformer(_) | ShowError::UnknownUtterance(_) => ErrorCode::NotFound,
        ShowError::CannotReceiveLines(_) | ShowError::InvalidBallot(_) => ErrorCode::BadMessage,
        _ => ErrorCode::State,
    };
    (code, e.to_string())
}

fn show_error(e: ShowError) -> GatewayError {
    match e {
        ShowError::UnknownPerformer(_) | ShowError::UnknownUtterance(_) => GatewayError::NotFound(e.to_string()),
        _ => GatewayError::Conflict(e.to_string()),
    }
}

/// A candidate generation round, run outside the session lock.
pub struct ProposeJob {
    token: String,
    seq: u64,
    set_id: u64,
    seed: u64,
    context: String,
    topic: TopicSet,
    created_at: u64,
    config: CurationConfig,
    backend: Arc<dyn LanguageBackend>,
    blocklist: Arc<Blocklist>,
}

impl ProposeJob {
    pub fn run(&self) -> Result<CandidateSet, CurationError> {
        propose(
            self.backend.as_ref(),
            &self.blocklist,
            &self.config,
            &ProposeRequest {
                id: self.set_id,
                context: &self.context,
                topic: &self.topic,
                seed: self.seed,
                created_at: self.created_at,
            },
        )
    }
}

/// Result of handling one inbound frame.
pub enum Step {
    Done(Vec<Outbound>),
    /// Run the job (with a deadline) and pass the outcome to
    /// [`SessionHost::finish_proposal`].
    Propose(ProposeJob),
}

/// How a generation round ended.
pub enum ProposalOutcome {
    Ready(CandidateSet),
    Failed(String),
    TimedOut,
}

/// Who sees which roles in a state view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerformerView {
    pub performer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<RoleKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneView {
    pub scene_id: u64,
    pub suggestion: String,
    pub started_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateView {
    pub session_id: String,
    pub state: SessionState,
    pub you: ClientRole,
    pub performers: Vec<PerformerView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneView>,
    pub scenes_played: usize,
    /// Lines waiting for the viewer, for Cyborgs and Puppets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queued: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    GoLive,
    OpenVoting,
    Close,
}

pub struct SessionHost {
    id: String,
    created_unix_ms: u64,
    host_token: String,
    settings: HostSettings,
    backend: Arc<dyn LanguageBackend>,
    blocklist: Arc<Blocklist>,
    state: HostState,
    connected: BTreeSet<String>,
    log: Option<LogFile>,
    issuer: TokenIssuer,
}

impl SessionHost {
    /// Starts a session and writes its first record. With `log_dir` the log
    /// lives in `<log_dir>/<session id>.jsonl`.
    pub fn create(
        show: ShowConfig,
        settings: HostSettings,
        backend: Arc<dyn LanguageBackend>,
        blocklist: Arc<Blocklist>,
        mut issuer: TokenIssuer,
        log_dir: Option<&Path>,
        created_unix_ms: u64,
    ) -> Result<Self, GatewayError> {
        let id = issuer.next_session_id();
        let host_token = issuer.next_token();
        let log = match log_dir {
            Some(dir) => Some(LogFile::create(&dir.join(format!("{id}.jsonl")), settings.fsync)?),
            None => None,
        };
        let mut host = Self {
            state: HostState {
                show: ShowSession::new(id.clone(), show),
                clients: BTreeMap::new(),
                sets: BTreeMap::new(),
                topic: TopicSet::none(),
                next_set_id: 1,
                next_seat: 1,
                out_seq: 0,
                records: 0,
            },
            id: id.clone(),
            created_unix_ms,
            host_token: host_token.clone(),
            settings,
            backend,
            blocklist,
            connected: BTreeSet::new(),
            log,
            issuer,
        };
        let mut tx = Txn::new(&host.state);
        tx.entries.push(Entry::SessionCreated {
            session_id: id,
            created_unix_ms,
            show,
            host_token: host_token.clone(),
            seed: settings.seed,
        });
        tx.entries.push(Entry::ClientRegistered {
            token: host_token.clone(),
            role: ClientRole::Host,
        });
        tx.state.clients.insert(
            host_token,
            ClientEntry {
                role: ClientRole::Host,
                last_seq: 0,
            },
        );
        host.commit(tx, None, 0)?;
        Ok(host)
    }

    /// Rebuilds a session from its log. Records cut short by a crash are
    /// dropped, so every command is either fully present or absent.
    pub fn recover(
        path: &Path,
        settings: HostSettings,
        backend: Arc<dyn LanguageBackend>,
        blocklist: Arc<Blocklist>,
        issuer: TokenIssuer,
    ) -> Result<Self, GatewayError> {
        let (log, records) = LogFile::recover(path, settings.fsync)?;
        let corrupt = |msg: String| GatewayError::Data(format!("{}: {msg}", path.display()));
        let Some(Entry::SessionCreated {
            session_id,
            created_unix_ms,
            show,
            host_token,
            seed,
        }) = records.first().and_then(|r| r.entries.first()).cloned()
        else {
            return Err(corrupt("log does not start with a session".into()));
        };
        let mut host = Self {
            state: HostState {
                show: ShowSession::new(session_id.clone(), show),
                clients: BTreeMap::new(),
                sets: BTreeMap::new(),
                topic: TopicSet::none(),
                next_set_id: 1,
                next_seat: 1,
                out_seq: 0,
                records: 0,
            },
            id: session_id,
            created_unix_ms,
            host_token,
            settings: HostSettings { seed, ..settings },
            backend,
            blocklist,
            connected: BTreeSet::new(),
            log: Some(log),
            issuer,
        };
        for record in &records {
            host.replay_record(record)
                .map_err(|e| corrupt(format!("record {}: {e}", record.n)))?;
        }
        Ok(host)
    }

    fn replay_record(&mut self, record: &LogRecord) -> Result<(), String> {
        let s = &mut self.state;
        for entry in &record.entries {
            match entry {
                Entry::SessionCreated { .. } => {
                    if record.n != 0 {
                        return Err("second session header".into());
                    }
                }
                Entry::ClientRegistered { token, role } => {
                    if let ClientRole::Audience { seat } = role {
                        s.next_seat = s.next_seat.max(seat + 1);
                    }
                    s.clients.insert(
                        token.clone(),
                        ClientEntry {
                            role: role.clone(),
                            last_seq: 0,
                        },
                    );
                }
                Entry::Show { event } => s.show.apply_logged(event.clone()).map_err(|e| e.to_string())?,
                Entry::CandidatesProposed { set } => {
                    s.next_set_id = s.next_set_id.max(set.id + 1);
                    s.sets.insert(set.id, set.clone());
                }
                Entry::CandidatesResolved { set_id, decision } => {
                    let set = s.sets.get_mut(set_id).ok_or(format!("unknown candidate set {set_id}"))?;
                    set.resolve(decision).map_err(|e| e.to_string())?;
                }
                Entry::TopicPrimed { topic } => s.topic = topic.clone(),
            }
        }
        if let (Some(token), Some(seq)) = (&record.client, record.client_seq) {
            let client = s.clients.get_mut(token).ok_or("record from unknown client")?;
            client.last_seq = seq;
        }
        s.out_seq = record.out_seq;
        s.records = record.n + 1;
        Ok(())
    }

    // ---- accessors ------------------------------------------------------

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn host_token(&self) -> &str {
        &self.host_token
    }

    pub fn created_unix_ms(&self) -> u64 {
        self.created_unix_ms
    }

    pub fn show(&self) -> &ShowSession {
        &self.state.show
    }

    pub fn role_of(&self, token: &str) -> Option<&ClientRole> {
        self.state.clients.get(token).map(|c| &c.role)
    }

    pub fn candidate_set(&self, id: u64) -> Option<&CandidateSet> {
        self.state.sets.get(&id)
    }

    pub fn topic(&self) -> &TopicSet {
        &self.state.topic
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.log.as_ref().map(|l| l.path())
    }

    pub fn is_connected(&self, token: &str) -> bool {
        self.connected.contains(token)
    }

    // ---- commit ---------------------------------------------------------

    fn commit(&mut self, mut tx: Txn, client: Option<(&str, u64)>, now: u64) -> Result<Vec<Outbound>, GatewayError> {
        let show_events = tx.state.show.log()[tx.show_mark..].to_vec();
        tx.entries.extend(show_events.into_iter().map(|event| Entry::Show { event }));
        let mut out = Vec::new();
        for (to, kind, payload) in tx.msgs {
            if !self.connected.contains(&to) {
                continue;
            }
            tx.state.out_seq += 1;
            out.push(Outbound {
                to,
                message: Envelope {
                    kind,
                    session_id: self.id.clone(),
                    seq: tx.state.out_seq,
                    payload,
                },
            });
        }
        if let Some((token, seq)) = client {
            if let Some(c) = tx.state.clients.get_mut(token) {
                c.last_seq = seq;
            }
        }
        let changed = !tx.entries.is_empty() || client.is_some() || !out.is_empty();
        if changed {
            let record = LogRecord {
                n: tx.state.records,
                at: now,
                client: client.map(|(t, _)| t.to_string()),
                client_seq: client.map(|(_, s)| s),
                out_seq: tx.state.out_seq,
                entries: tx.entries,
            };
            if let Some(log) = &mut self.log {
                log.append(&record)?;
            }
            tx.state.records += 1;
        }
        self.state = tx.state;
        Ok(out)
    }

    /// Commits, or answers the sender with an internal error when the log
    /// cannot be written. Nothing is applied in that case.
    fn commit_or_report(&mut self, tx: Txn, client: Option<(&str, u64)>, reply_to: &str, now: u64) -> Vec<Outbound> {
        match self.commit(tx, client, now) {
            Ok(out) => out,
            Err(e) => {
                tracing::error!(session = %self.id, "log append failed: {e}");
                self.state.out_seq += 1;
                vec![Outbound {
                    to: reply_to.to_string(),
                    message: Envelope::new(
                        MessageType::Error,
                        &self.id,
                        self.state.out_seq,
                        &ErrorPayload {
                            code: ErrorCode::Internal,
                            message: "could not record the change; nothing was applied".into(),
                            ref_seq: client.map(|(_, s)| s),
                        },
                    ),
                }]
            }
        }
    }

    fn reject(&mut self, token: &str, consumed: Option<u64>, ref_seq: Option<u64>, (code, message): Rejection, now: u64) -> Vec<Outbound> {
        let mut tx = Txn::new(&self.state);
        tx.send(token, MessageType::Error, &ErrorPayload { code, message, ref_seq });
        self.commit_or_report(tx, consumed.map(|s| (token, s)), token, now)
    }

    // ---- connections ----------------------------------------------------

    /// Marks a client connected, tells it the current state and hands a
    /// performer any line that waited while it was away.
    pub fn connect(&mut self, token: &str, now: u64) -> Result<Vec<Outbound>, GatewayError> {
        let role = self
            .role_of(token)
            .cloned()
            .ok_or_else(|| GatewayError::Unauthorized("unknown token".into()))?;
        self.connected.insert(token.to_string());
        let mut tx = Txn::new(&self.state);
        let performers = if tx.state.show.state() >= SessionState::Voting {
            self.on_stage()
        } else {
            Vec::new()
        };
        tx.send(
            token,
            MessageType::State,
            &StatePayload {
                state: tx.state.show.state(),
                performers,
            },
        );
        if let Some(performer) = role.performer().filter(|_| role.member_role().is_some_and(RoleKind::receives_lines)) {
            let outstanding = tx
                .state
                .show
                .utterances()
                .find(|u| u.performer == performer && u.status == UtteranceStatus::Delivered && u.spoken_ack_at.is_none())
                .cloned();
            if let Some(u) = outstanding {
                tx.send(
                    token,
                    MessageType::LineDeliver,
                    &LineDeliverPayload {
                        utterance_id: u.id,
                        text: u.text,
                        stage: DeliveryStage::Delivered,
                        speak: true,
                        interrupting: u.interrupting,
                        position: None,
                    },
                );
            }
            let queued = tx.state.show.queue(performer);
            for (position, id) in queued.iter().enumerate() {
                let u = tx.state.show.utterance(*id).expect("queued line exists").clone();
                tx.send(
                    token,
                    MessageType::LineDeliver,
                    &LineDeliverPayload {
                        utterance_id: u.id,
                        text: u.text,
                        stage: DeliveryStage::Queued,
                        speak: false,
                        interrupting: u.interrupting,
                        position: Some(position),
                    },
                );
            }
            self.pump(&mut tx, performer, now);
        }
        self.commit(tx, None, now)
    }

    pub fn disconnect(&mut self, token: &str) {
        self.connected.remove(token);
    }

    // ---- inbound messages -------------------------------------------------

    /// Handles one inbound frame from `token`.
    pub fn handle(&mut self, token: &str, text: &str, now: u64) -> Step {
        let Some(client) = self.state.clients.get(token).cloned() else {
            return Step::Done(Vec::new());
        };
        let env = match Envelope::parse(text) {
            Ok(env) => env,
            Err(e) => {
                return Step::Done(self.reject(token, None, None, (ErrorCode::BadMessage, format!("malformed envelope: {e}")), now))
            }
        };
        if env.session_id != self.id {
            let msg = format!("this stream belongs to session {}", self.id);
            return Step::Done(self.reject(token, None, Some(env.seq), (ErrorCode::WrongSession, msg), now));
        }
        if env.seq <= client.last_seq {
            // at-most-once: acknowledge the redelivery, change nothing
            let mut tx = Txn::new(&self.state);
            tx.send(
                token,
                MessageType::Ack,
                &AckPayload {
                    ref_seq: env.seq,
                    duplicate: true,
                    utterance_ids: Vec::new(),
                },
            );
            return Step::Done(self.commit_or_report(tx, None, token, now));
        }
        if env.seq != client.last_seq + 1 {
            let msg = format!("expected seq {}, got {}", client.last_seq + 1, env.seq);
            return Step::Done(self.reject(token, None, Some(env.seq), (ErrorCode::SeqGap, msg), now));
        }
        let inbound = match Inbound::from_envelope(&env) {
            Ok(m) => m,
            Err(msg) => return Step::Done(self.reject(token, None, Some(env.seq), (ErrorCode::BadMessage, msg), now)),
        };
        if !may_send(&client.role, inbound.kind()) {
            let msg = format!("{} may not send {}", client.role, inbound.kind());
            return Step::Done(self.reject(token, Some(env.seq), Some(env.seq), (ErrorCode::RoleForbidden, msg), now));
        }
        if let Inbound::ContextSubmit(c) = inbound {
            return match self.begin_proposal(token, env.seq, c, now) {
                Ok(job) => Step::Propose(job),
                Err(r) => Step::Done(self.reject(token, Some(env.seq), Some(env.seq), r, now)),
            };
        }
        Step::Done(self.apply(token, &client.role, env.seq, inbound, now))
    }

    /// Handles a frame and runs any generation round inline.
    pub fn handle_now(&mut self, token: &str, text: &str, now: u64) -> Vec<Outbound> {
        match self.handle(token, text, now) {
            Step::Done(out) => out,
            Step::Propose(job) => {
                let outcome = match job.run() {
                    Ok(set) => ProposalOutcome::Ready(set),
                    Err(e) => ProposalOutcome::Failed(e.to_string()),
                };
                self.finish_proposal(&job, outcome, now)
            }
        }
    }

    fn begin_proposal(&mut self, token: &str, seq: u64, c: ContextSubmit, now: u64) -> Result<ProposeJob, Rejection> {
        if self.state.show.state() != SessionState::Live {
            return Err((ErrorCode::State, format!("session is {}, expected live", self.state.show.state())));
        }
        if c.text.trim().is_empty() {
            return Err((ErrorCode::BadMessage, "context is empty".into()));
        }
        let set_id = self.state.next_set_id;
        self.state.next_set_id += 1;
        Ok(ProposeJob {
            token: token.to_string(),
            seq,
            set_id,
            seed: candidate_seed(self.settings.seed, set_id as usize),
            context: c.text,
            topic: self.state.topic.clone(),
            created_at: now,
            config: self.settings.curation,
            backend: Arc::clone(&self.backend),
            blocklist: Arc::clone(&self.blocklist),
        })
    }

    /// Records a finished generation round and sends the candidates to the
    /// CEO controller, or reports why there are none.
    pub fn finish_proposal(&mut self, job: &ProposeJob, outcome: ProposalOutcome, now: u64) -> Vec<Outbound> {
        let Some(client) = self.state.clients.get(&job.token) else {
            return Vec::new();
        };
        if client.last_seq >= job.seq {
            return Vec::new();
        }
        match outcome {
            ProposalOutcome::Ready(set) => {
                let mut tx = Txn::new(&self.state);
                let payload = CandidatesPayload {
                    set_id: set.id,
                    context: set.context.clone(),
                    candidates: set
                        .presented_candidates()
                        .enumerate()
                        .map(|(i, c)| CandidateView {
                            position: i + 1,
                            text: c.text.clone(),
                            score: c.score,
                        })
                        .collect(),
                    generated: set.generated.len(),
                    filtered: set.generated.iter().filter(|c| c.flags.filtered()).count(),
                };
                tx.send(&job.token, MessageType::Candidates, &payload);
                tx.state.sets.insert(set.id, set.clone());
                tx.entries.push(Entry::CandidatesProposed { set });
                self.commit_or_report(tx, Some((&job.token, job.seq)), &job.token, now)
            }
            ProposalOutcome::Failed(msg) => self.reject(&job.token, Some(job.seq), Some(job.seq), (ErrorCode::Internal, msg), now),
            ProposalOutcome::TimedOut => self.reject(
                &job.token,
                Some(job.seq),
                Some(job.seq),
                (ErrorCode::Timeout, "no candidates before the deadline; submit the context again".into()),
                now,
            ),
        }
    }

    fn apply(&mut self, token: &str, role: &ClientRole, seq: u64, inbound: Inbound, now: u64) -> Vec<Outbound> {
        let mut tx = Txn::new(&self.state);
        let result = match inbound {
            Inbound::LineSelect(m) => self.line_select(&mut tx, m, now),
            Inbound::LineTyped(m) => self.line_typed(&mut tx, m, now),
            Inbound::SpokenAck(m) => self.spoken(&mut tx, role, m, now),
            Inbound::LineSkip(m) => self.line_skip(&mut tx, role, m, now),
            Inbound::SceneStart(m) => self.scene_start(&mut tx, m, now),
            Inbound::SceneEnd(_) => self.scene_end(&mut tx, now),
            Inbound::VoteSubmit(m) => self.vote(&mut tx, role, m, now),
            Inbound::ContextSubmit(_) => unreachable!("handled before apply"),
        };
        match result {
            Ok(utterance_ids) => {
                tx.send(
                    token,
                    MessageType::Ack,
                    &AckPayload {
                        ref_seq: seq,
                        duplicate: false,
                        utterance_ids,
                    },
                );
                self.commit_or_report(tx, Some((token, seq)), token, now)
            }
            Err(r) => self.reject(token, Some(seq), Some(seq), r, now),
        }
    }

    // ---- command bodies ---------------------------------------------------

    fn token_for(&self, state: &HostState, performer: &str) -> Option<String> {
        state
            .clients
            .iter()
            .find(|(_, c)| c.role.performer() == Some(performer))
            .map(|(t, _)| t.clone())
    }

    fn target(&self, state: &HostState, named: Option<String>, kind: RoleKind) -> Result<String, Rejection> {
        match named {
            Some(p) => match state.show.role(&p) {
                Some(r) if r.kind == kind => Ok(p),
                Some(_) => Err((ErrorCode::RoleForbidden, format!("`{p}` does not take lines from this controller"))),
                None => Err((ErrorCode::NotFound, format!("unknown performer `{p}`"))),
            },
            None => {
                let mut fed = state.show.performers_with(kind);
                match (fed.next(), fed.next()) {
                    (Some(r), None) => Ok(r.performer_id.clone()),
                    (None, _) => Err((ErrorCode::NotFound, "nobody takes lines from this controller".into())),
                    (Some(_), Some(_)) => Err((ErrorCode::BadMessage, "several performers qualify; name one".into())),
                }
            }
        }
    }

    /// Delivers the head of the performer's queue when their device is
    /// connected and has finished the previous line.
    fn pump(&self, tx: &mut Txn, performer: &str, now: u64) {
        if tx.state.show.state() != SessionState::Live {
            return;
        }
        let Some(token) = self.token_for(&tx.state, performer) else {
            return;
        };
        if !self.connected.contains(&token) {
            return;
        }
        let busy = tx
            .state
            .show
            .utterances()
            .any(|u| u.performer == performer && u.status == UtteranceStatus::Delivered && u.spoken_ack_at.is_none());
        if busy {
            return;
        }
        if let Ok(Some(u)) = tx.state.show.next_line(performer, now) {
            tx.send(
                &token,
                MessageType::LineDeliver,
                &LineDeliverPayload {
                    utterance_id: u.id,
                    text: u.text,
                    stage: DeliveryStage::Delivered,
                    speak: true,
                    interrupting: u.interrupting,
                    position: None,
                },
            );
        }
    }

    fn enqueue(&self, tx: &mut Txn, performer: &str, draft: LineDraft, interrupting: bool, now: u64) -> Result<u64, Rejection> {
        let rec = tx
            .state
            .show
            .enqueue_line(performer, draft, interrupting, now)
            .map_err(show_rejection)?;
        self.pump(tx, performer, now);
        let u = tx.state.show.utterance(rec.utterance_id).expect("line just queued").clone();
        if u.status == UtteranceStatus::Queued {
            if let Some(token) = self.token_for(&tx.state, performer) {
                let position = tx.state.show.queue(performer).iter().position(|&id| id == u.id);
                tx.send(
                    &token,
                    MessageType::LineDeliver,
                    &LineDeliverPayload {
                        utterance_id: u.id,
                        text: u.text,
                        stage: DeliveryStage::Queued,
                        speak: false,
                        interrupting,
                        position,
                    },
                );
            }
        }
        Ok(rec.utterance_id)
    }

    fn line_select(&self, tx: &mut Txn, m: LineSelect, now: u64) -> Result<Vec<u64>, Rejection> {
        let decision = match (m.discard, m.positions.is_empty()) {
            (true, true) => Decision::Discard,
            (false, false) => Decision::Select {
                positions: m.positions.clone(),
            },
            (true, false) => return Err((ErrorCode::BadMessage, "discard takes no positions".into())),
            (false, true) => return Err((ErrorCode::BadMessage, "select at least one position or discard".into())),
        };
        let performer = match decision {
            Decision::Discard => None,
            _ => Some(self.target(&tx.state, m.performer, RoleKind::Cyborg)?),
        };
        let set = tx
            .state
            .sets
            .get_mut(&m.set_id)
            .ok_or((ErrorCode::NotFound, format!("unknown candidate set {}", m.set_id)))?;
        let drafts = set.resolve(&decision).map_err(|e| match e {
            CurationError::AlreadyResolved(_) => (ErrorCode::State, e.to_string()),
            _ => (ErrorCode::BadMessage, e.to_string()),
        })?;
        tx.entries.push(Entry::CandidatesResolved {
            set_id: m.set_id,
            decision,
        });
        let mut ids = Vec::new();
        if let Some(performer) = performer {
            for draft in drafts {
                ids.push(self.enqueue(tx, &performer, draft, m.interrupting, now)?);
            }
        }
        Ok(ids)
    }

    fn line_typed(&self, tx: &mut Txn, m: LineTyped, now: u64) -> Result<Vec<u64>, Rejection> {
        if m.text.trim().is_empty() {
            return Err((ErrorCode::BadMessage, "line is empty".into()));
        }
        let performer = self.target(&tx.state, m.performer, RoleKind::Puppet)?;
        let draft = LineDraft {
            text: m.text,
            source: Source::PuppetMaster,
            created_at: now.saturating_sub(m.composed_ms.unwrap_or(0)),
        };
        Ok(vec![self.enqueue(tx, &performer, draft, m.interrupting, now)?])
    }

    fn spoken(&self, tx: &mut Txn, role: &ClientRole, m: SpokenAck, now: u64) -> Result<Vec<u64>, Rejection> {
        let performer = role.performer().expect("only performers send spoken acks");
        tx.state
            .show
            .acknowledge_spoken(performer, m.utterance_id, now)
            .map_err(show_rejection)?;
        self.pump(tx, performer, now);
        Ok(Vec::new())
    }

    fn line_skip(&self, tx: &mut Txn, role: &ClientRole, m: LineSkip, now: u64) -> Result<Vec<u64>, Rejection> {
        let u = tx
            .state
            .show
            .utterance(m.utterance_id)
            .ok_or((ErrorCode::NotFound, format!("unknown utterance {}", m.utterance_id)))?
            .clone();
        let target_kind = tx.state.show.role(&u.performer).map(|r| r.kind);
        let allowed = match role {
            ClientRole::Host => true,
            ClientRole::Member { performer, role } => match role {
                RoleKind::CeoController => target_kind == Some(RoleKind::Cyborg),
                RoleKind::PuppetMaster => target_kind == Some(RoleKind::Puppet),
                _ => *performer == u.performer,
            },
            ClientRole::Audience { .. } => false,
        };
        if !allowed {
            // indistinguishable from a missing line, so other performers' queues stay private
            return Err((ErrorCode::NotFound, format!("unknown utterance {}", m.utterance_id)));
        }
        tx.state
            .show
            .skip_line(&u.performer, u.id, now)
            .map_err(show_rejection)?;
        if let Some(token) = self.token_for(&tx.state, &u.performer) {
            tx.send(
                &token,
                MessageType::LineSkip,
                &SkipNotice {
                    utterance_id: u.id,
                    performer: u.performer.clone(),
                },
            );
        }
        Ok(Vec::new())
    }

    fn broadcast(&self, tx: &mut Txn, kind: MessageType, payload: &impl Serialize) {
        let tokens: Vec<String> = tx.state.clients.keys().cloned().collect();
        for token in tokens {
            tx.send(&token, kind, payload);
        }
    }

    fn scene_start(&self, tx: &mut Txn, m: SceneStart, now: u64) -> Result<Vec<u64>, Rejection> {
        let scene = tx
            .state
            .show
            .start_scene(m.suggestion.clone(), now)
            .map_err(show_rejection)?
            .clone();
        let seeds = suggestion_seeds(&m.suggestion);
        let seed_refs: Vec<&str> = seeds.iter().map(String::as_str).collect();
        let topic = if seed_refs.is_empty() {
            TopicSet::none()
        } else {
            self.backend
                .prime(&seed_refs, self.settings.topic_size)
                .with_bonus(self.settings.topic_bonus)
        };
        tx.state.topic = topic.clone();
        tx.entries.push(Entry::TopicPrimed { topic });
        self.broadcast(
            tx,
            MessageType::SceneStart,
            &SceneStartPayload {
                scene_id: scene.id,
                suggestion: scene.suggestion,
                started_at: scene.started_at,
            },
        );
        Ok(Vec::new())
    }

    fn scene_end(&self, tx: &mut Txn, now: u64) -> Result<Vec<u64>, Rejection> {
        let summary = tx.state.show.end_scene(now).map_err(show_rejection)?;
        self.broadcast(
            tx,
            MessageType::SceneEnd,
            &SceneEndPayload {
                scene_id: summary.scene.id,
                duration_ms: summary.duration_ms,
            },
        );
        Ok(Vec::new())
    }

    fn vote(&self, tx: &mut Txn, role: &ClientRole, m: VoteSubmit, now: u64) -> Result<Vec<u64>, Rejection> {
        let ClientRole::Audience { seat } = role else {
            unreachable!("only the audience votes");
        };
        tx.state
            .show
            .submit_vote(&format!("seat-{seat}"), m.guesses, now)
            .map_err(show_rejection)?;
        Ok(Vec::new())
    }

    // ---- host operations --------------------------------------------------

    fn require_host(&self, token: &str) -> Result<(), GatewayError> {
        match self.role_of(token) {
            Some(ClientRole::Host) => Ok(()),
            Some(_) => Err(GatewayError::Forbidden("host token required".into())),
            None => Err(GatewayError::Unauthorized("unknown token".into())),
        }
    }

    /// Adds a person to the roster and returns their token.
    pub fn register_member(
        &mut self,
        host_token: &str,
        performer: &str,
        kind: RoleKind,
        secret: bool,
        now: u64,
    ) -> Result<String, GatewayError> {
        self.require_host(host_token)?;
        if performer.trim().is_empty() {
            return Err(GatewayError::BadRequest("performer id is empty".into()));
        }
        let mut tx = Txn::new(&self.state);
        tx.state
            .show
            .assign_role(performer, kind, secret, now)
            .map_err(show_error)?;
        let token = self.issuer.next_token();
        let role = ClientRole::Member {
            performer: performer.to_string(),
            role: kind,
        };
        tx.state.clients.insert(
            token.clone(),
            ClientEntry {
                role: role.clone(),
                last_seq: 0,
            },
        );
        tx.entries.push(Entry::ClientRegistered {
            token: token.clone(),
            role,
        });
        self.commit(tx, None, now)?;
        Ok(token)
    }

    /// Issues a token for one audience device.
    pub fn register_audience(&mut self, now: u64) -> Result<(String, u64), GatewayError> {
        let mut tx = Txn::new(&self.state);
        let seat = tx.state.next_seat;
        tx.state.next_seat += 1;
        let token = self.issuer.next_token();
        let role = ClientRole::Audience { seat };
        tx.state.clients.insert(
            token.clone(),
            ClientEntry {
                role: role.clone(),
                last_seq: 0,
            },
        );
        tx.entries.push(Entry::ClientRegistered {
            token: token.clone(),
            role,
        });
        self.commit(tx, None, now)?;
        Ok((token, seat))
    }

    fn on_stage(&self) -> Vec<String> {
        self.state
            .show
            .roster()
            .filter(|r| r.kind.on_stage())
            .map(|r| r.performer_id.clone())
            .collect()
    }

    /// Moves the show along: live, then voting, then closed.
    pub fn transition(&mut self, host_token: &str, to: Transition, now: u64) -> Result<(SessionState, Vec<Outbound>), GatewayError> {
        self.require_host(host_token)?;
        let mut tx = Txn::new(&self.state);
        let show = &mut tx.state.show;
        match to {
            Transition::GoLive => show.go_live(now),
            Transition::OpenVoting => show.open_voting(now),
            Transition::Close => show.close(now),
        }
        .map_err(show_error)?;
        let state = tx.state.show.state();
        let performers = if state >= SessionState::Voting {
            self.on_stage()
        } else {
            Vec::new()
        };
        self.broadcast(&mut tx, MessageType::State, &StatePayload { state, performers });
        if state == SessionState::Closed {
            let tally = tx.state.show.tally();
            self.broadcast(&mut tx, MessageType::Tally, &TallyPayload { tally });
        }
        let out = self.commit(tx, None, now)?;
        Ok((state, out))
    }

    // ---- queries ----------------------------------------------------------

    /// The session as the token's owner may see it. Roles stay hidden from
    /// the audience and from performers other than their own until the show
    /// closes.
    pub fn state_view(&self, token: &str) -> Result<StateView, GatewayError> {
        let role = self
            .role_of(token)
            .cloned()
            .ok_or_else(|| GatewayError::Unauthorized("unknown token".into()))?;
        let show = &self.state.show;
        let closed = show.state() == SessionState::Closed;
        let sees_all = closed || role.steers();
        let performers = show
            .roster()
            .filter(|r| sees_all || r.kind.on_stage())
            .map(|r| PerformerView {
                performer: r.performer_id.clone(),
                role: (sees_all || role.performer() == Some(r.performer_id.as_str())).then_some(r.kind),
            })
            .collect();
        let queued = role
            .performer()
            .filter(|_| role.member_role().is_some_and(RoleKind::receives_lines))
            .map(|p| show.queue(p).len());
        Ok(StateView {
            session_id: self.id.clone(),
            state: show.state(),
            you: role,
            performers,
            scene: show.open_scene().map(|s| SceneView {
                scene_id: s.id,
                suggestion: s.suggestion.clone(),
                started_at: s.started_at,
            }),
            scenes_played: show.scenes().len(),
            queued,
        })
    }

    pub fn transcript(&self, token: &str) -> Result<Transcript, GatewayError> {
        self.require_host(token)?;
        Transcript::from_session(&self.state.show).map_err(show_error)
    }

    pub fn latency(&self, token: &str) -> Result<LatencyStats, GatewayError> {
        match self.role_of(token) {
            Some(r) if r.steers() => Ok(self.state.show.latency_stats()),
            Some(_) => Err(GatewayError::Forbidden("controllers only".into())),
            None => Err(GatewayError::Unauthorized("unknown token".into())),
        }
    }

    /// The vote tally: for the host once voting opens, for everyone once the
    /// show is closed.
    pub fn tally(&self, token: &str) -> Result<VoteTally, GatewayError> {
        let role = self
            .role_of(token)
            .ok_or_else(|| GatewayError::Unauthorized("unknown token".into()))?;
        match self.state.show.state() {
            SessionState::Closed => Ok(self.state.show.tally()),
            SessionState::Voting if role.is_host() => Ok(self.state.show.tally()),
            s => Err(GatewayError::Conflict(format!("tally is not available while {s}"))),
        }
    }
}

/// Which client may send which message type. Role-specific rules (such as
/// whose lines a controller may skip) are checked when the message applies.
pub fn may_send(role: &ClientRole, kind: MessageType) -> bool {
    use MessageType as M;
    let member = role.member_role();
    match kind {
        M::ContextSubmit | M::LineSelect => member == Some(RoleKind::CeoController),
        M::LineTyped => member == Some(RoleKind::PuppetMaster),
        M::LineDeliver => member.is_some_and(RoleKind::receives_lines),
        M::LineSkip => role.steers() || member.is_some_and(RoleKind::receives_lines),
        M::SceneStart | M::SceneEnd => role.steers(),
        M::VoteSubmit => role.is_audience(),
        _ => false,
    }
}
