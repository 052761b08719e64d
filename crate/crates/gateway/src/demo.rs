//! A scripted two-scene show driven through [`SessionHost`] on a fixed
//! clock, and the small in-process driver it uses.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use earpiece_core::curation::Blocklist;
use earpiece_core::fixtures;
use earpiece_core::show::{RoleKind, ShowConfig, Transcript};
use earpiece_core::textgen::{corpora, LanguageBackend, NGramModel, DEFAULT_ORDER};
use serde_json::{json, Value};

use crate::auth::TokenIssuer;
use crate::host::{HostSettings, Outbound, SessionHost, Transition};
use crate::protocol::{Envelope, ErrorPayload, MessageType};
use crate::GatewayError;

pub const DEMO_SEED: u64 = 2019;

/// Light smoothing so the tiny bundled corpora still yield readable lines.
pub const DEMO_ALPHA: f64 = 0.001;

/// The model behind the demo: both bundled corpora.
pub fn bundled_model() -> NGramModel {
    let lines: Vec<&str> = corpora::all().iter().flat_map(|(_, text)| corpora::lines(text)).collect();
    NGramModel::train_named("bundled", &lines, DEFAULT_ORDER, DEMO_ALPHA).expect("bundled corpora train")
}

/// Drives a session in-process: keeps each client's sequence numbers and
/// everything the server sent to it.
pub struct Rehearsal {
    pub host: SessionHost,
    seqs: BTreeMap<String, u64>,
    inbox: BTreeMap<String, Vec<Envelope>>,
}

impl Rehearsal {
    pub fn new(host: SessionHost) -> Self {
        Self {
            host,
            seqs: BTreeMap::new(),
            inbox: BTreeMap::new(),
        }
    }

    fn deliver(&mut self, out: Vec<Outbound>) -> Vec<Outbound> {
        for o in &out {
            self.inbox.entry(o.to.clone()).or_default().push(o.message.clone());
        }
        out
    }

    pub fn connect(&mut self, token: &str, at: u64) -> Result<Vec<Outbound>, GatewayError> {
        let out = self.host.connect(token, at)?;
        Ok(self.deliver(out))
    }

    pub fn host_token(&self) -> String {
        self.host.host_token().to_string()
    }

    pub fn member(&mut self, performer: &str, kind: RoleKind, at: u64) -> Result<String, GatewayError> {
        let host = self.host_token();
        self.host.register_member(&host, performer, kind, kind.on_stage(), at)
    }

    pub fn audience(&mut self, at: u64) -> Result<String, GatewayError> {
        Ok(self.host.register_audience(at)?.0)
    }

    pub fn transition(&mut self, to: Transition, at: u64) -> Result<Vec<Outbound>, GatewayError> {
        let host = self.host_token();
        let (_, out) = self.host.transition(&host, to, at)?;
        Ok(self.deliver(out))
    }

    /// Sends a message with the client's next sequence number.
    pub fn send(&mut self, token: &str, kind: MessageType, payload: Value, at: u64) -> Vec<Outbound> {
        let seq = self.seqs.get(token).copied().unwrap_or(0) + 1;
        self.seqs.insert(token.to_string(), seq);
        self.send_raw(token, &Envelope::new(kind, self.host.id(), seq, &payload).to_json(), at)
    }

    pub fn send_raw(&mut self, token: &str, text: &str, at: u64) -> Vec<Outbound> {
        let out = self.host.handle_now(token, text, at);
        self.deliver(out)
    }

    /// Like [`Rehearsal::send`], failing if the server answers with an error.
    pub fn expect(&mut self, token: &str, kind: MessageType, payload: Value, at: u64) -> Result<Vec<Outbound>, GatewayError> {
        let out = self.send(token, kind, payload, at);
        if let Some(e) = out.iter().find(|o| o.to == token && o.message.kind == MessageType::Error) {
            let p: ErrorPayload = e.message.payload_as().map_err(|e| GatewayError::Data(e.to_string()))?;
            return Err(GatewayError::Conflict(format!("{kind} at {at} ms refused: {:?} {}", p.code, p.message)));
        }
        Ok(out)
    }

    pub fn inbox(&self, token: &str) -> &[Envelope] {
        self.inbox.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn last(&self, token: &str, kind: MessageType) -> Option<&Envelope> {
        self.inbox(token).iter().rev().find(|e| e.kind == kind)
    }

    /// Id of the line the performer's device was last told to speak.
    pub fn speaking(&self, token: &str) -> Option<u64> {
        self.inbox(token)
            .iter()
            .rev()
            .find(|e| e.kind == MessageType::LineDeliver && e.payload["speak"] == json!(true))
            .and_then(|e| e.payload["utterance_id"].as_u64())
    }

    /// Acknowledges the line the performer is speaking.
    pub fn spoken(&mut self, token: &str, at: u64) -> Result<Vec<Outbound>, GatewayError> {
        let id = self
            .speaking(token)
            .ok_or_else(|| GatewayError::Conflict("performer has nothing to speak".into()))?;
        self.expect(token, MessageType::LineDeliver, json!({ "utterance_id": id }), at)
    }

    pub fn tokens(&self) -> impl Iterator<Item = &String> {
        self.inbox.keys()
    }
}

/// The demo cast's tokens.
pub struct Cast {
    pub ana: String,
    pub ben: String,
    pub cleo: String,
    pub dev: String,
    pub eve: String,
    pub finn: String,
    pub audience: Vec<String>,
}

pub struct DemoRun {
    pub rehearsal: Rehearsal,
    pub cast: Cast,
    pub transcript: Transcript,
}

/// One ballot per audience seat.
const BALLOTS: [[(&str, RoleKind); 4]; 6] = {
    use RoleKind::{Cyborg as C, FreeWill as F, Puppet as P};
    [
        [("ana", C), ("ben", P), ("cleo", F), ("dev", F)],
        [("ana", C), ("ben", F), ("cleo", P), ("dev", F)],
        [("ana", F), ("ben", P), ("cleo", C), ("dev", F)],
        [("ana", C), ("ben", P), ("cleo", F), ("dev", F)],
        [("ana", P), ("ben", C), ("cleo", F), ("dev", F)],
        [("ana", C), ("ben", F), ("cleo", F), ("dev", P)],
    ]
};

/// Plays the demo show with the bundled model.
pub fn run_demo() -> Result<DemoRun, GatewayError> {
    run_demo_with(Arc::new(bundled_model()), None)
}

/// A session with the demo cast registered and connected at 500 ms, still
/// in setup. With `log_dir` the session is logged there.
pub fn assemble(backend: Arc<dyn LanguageBackend>, log_dir: Option<&Path>) -> Result<(Rehearsal, Cast), GatewayError> {
    let settings = HostSettings {
        seed: DEMO_SEED,
        ..HostSettings::default()
    };
    let host = SessionHost::create(
        ShowConfig::default(),
        settings,
        backend,
        Arc::new(Blocklist::parse(fixtures::BLOCKLIST)),
        TokenIssuer::seeded(DEMO_SEED),
        log_dir,
        0,
    )?;
    let mut r = Rehearsal::new(host);
    let boss = r.host_token();
    let cast = Cast {
        ana: r.member("ana", RoleKind::Cyborg, 0)?,
        ben: r.member("ben", RoleKind::Puppet, 0)?,
        cleo: r.member("cleo", RoleKind::FreeWill, 0)?,
        dev: r.member("dev", RoleKind::FreeWill, 0)?,
        eve: r.member("eve", RoleKind::CeoController, 0)?,
        finn: r.member("finn", RoleKind::PuppetMaster, 0)?,
        audience: (0..BALLOTS.len()).map(|_| r.audience(0)).collect::<Result<_, _>>()?,
    };
    for token in [&boss, &cast.ana, &cast.ben, &cast.cleo, &cast.dev, &cast.eve, &cast.finn]
        .into_iter()
        .chain(&cast.audience)
    {
        r.connect(token, 500)?;
    }
    Ok((r, cast))
}

pub fn run_demo_with(backend: Arc<dyn LanguageBackend>, log_dir: Option<&Path>) -> Result<DemoRun, GatewayError> {
    let (mut r, cast) = assemble(backend, log_dir)?;
    let boss = r.host_token();
    let (ana, ben, eve, finn) = (cast.ana.clone(), cast.ben.clone(), cast.eve.clone(), cast.finn.clone());
    let typed = |text: &str, composed_ms: u64, interrupting: bool| {
        json!({ "text": text, "composed_ms": composed_ms, "interrupting": interrupting })
    };

    r.transition(Transition::GoLive, 1_000)?;

    // scene one: four minutes
    r.expect(&boss, MessageType::SceneStart, json!({ "suggestion": "a storm at sea" }), 5_000)?;
    let set = propose(&mut r, &eve, "the storm is here, raise the", 12_000)?;
    r.expect(&eve, MessageType::LineSelect, json!({ "set_id": set, "positions": [1, 3] }), 14_300)?;
    r.spoken(&ana, 15_800)?;
    r.spoken(&ana, 19_000)?;
    r.expect(&finn, MessageType::LineTyped, typed("Batten down the hatches, you lazy lot!", 1_800, false), 21_000)?;
    r.spoken(&ben, 23_000)?;
    let set = propose(&mut r, &eve, "captain, is the ship", 30_000)?;
    r.expect(&eve, MessageType::LineSelect, json!({ "set_id": set, "positions": [2] }), 32_500)?;
    r.spoken(&ana, 35_000)?;
    r.expect(&finn, MessageType::LineTyped, typed("I can see land!", 2_200, false), 40_000)?;
    r.expect(&finn, MessageType::LineTyped, typed("Or is that a whale?", 1_000, false), 41_000)?;
    let queued = r
        .last(&ben, MessageType::LineDeliver)
        .and_then(|e| e.payload["utterance_id"].as_u64())
        .expect("queued notice");
    r.expect(&finn, MessageType::LineSkip, json!({ "utterance_id": queued }), 42_000)?;
    r.spoken(&ben, 43_000)?;
    let set = propose(&mut r, &eve, "we are lost at sea", 60_000)?;
    r.expect(&eve, MessageType::LineSelect, json!({ "set_id": set, "discard": true }), 61_500)?;
    r.expect(&boss, MessageType::SceneEnd, json!({}), 245_000)?;

    // scene two: five minutes
    r.expect(&boss, MessageType::SceneStart, json!({ "suggestion": "a job interview at a bakery" }), 260_000)?;
    let set = propose(&mut r, &eve, "so, why do you want", 270_000)?;
    r.expect(&eve, MessageType::LineSelect, json!({ "set_id": set, "positions": [1] }), 273_900)?;
    r.spoken(&ana, 276_000)?;
    r.expect(&finn, MessageType::LineTyped, typed("Do you like bread?", 2_000, false), 280_000)?;
    r.expect(&finn, MessageType::LineTyped, typed("I have a question.", 1_000, false), 281_000)?;
    r.expect(&finn, MessageType::LineTyped, typed("Stop! The oven is on fire!", 1_000, true), 281_500)?;
    r.spoken(&ben, 282_000)?;
    r.spoken(&ben, 283_200)?;
    r.spoken(&ben, 285_000)?;
    let set = propose(&mut r, &eve, "tell me, where have you", 290_000)?;
    r.expect(&eve, MessageType::LineSelect, json!({ "set_id": set, "positions": [1, 2] }), 292_000)?;
    r.spoken(&ana, 293_800)?;
    r.spoken(&ana, 296_000)?;
    r.expect(&boss, MessageType::SceneEnd, json!({}), 560_000)?;

    r.transition(Transition::OpenVoting, 570_000)?;
    for (i, ballot) in BALLOTS.iter().enumerate() {
        let guesses: BTreeMap<&str, RoleKind> = ballot.iter().copied().collect();
        let seat = cast.audience[i].clone();
        r.expect(&seat, MessageType::VoteSubmit, json!({ "guesses": guesses }), 575_000 + 1_000 * i as u64)?;
    }
    r.transition(Transition::Close, 600_000)?;

    let transcript = r.host.transcript(&boss)?;
    Ok(DemoRun {
        rehearsal: r,
        cast,
        transcript,
    })
}

/// Submits a context and returns the id of the candidate set it produced.
fn propose(r: &mut Rehearsal, ceo: &str, context: &str, at: u64) -> Result<u64, GatewayError> {
    r.expect(ceo, MessageType::ContextSubmit, json!({ "text": context }), at)?;
    r.last(ceo, MessageType::Candidates)
        .and_then(|e| e.payload["set_id"].as_u64())
        .ok_or_else(|| GatewayError::Conflict("no candidates".into()))
}
