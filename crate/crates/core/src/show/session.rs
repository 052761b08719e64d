use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::latency::LatencyStats;
use super::types::{
    Ballot, LineDraft, PerformerId, Role, RoleKind, Scene, SessionState, ShowConfig, Utterance, UtteranceStatus,
};
use super::voting::{tally, VoteTally};
use super::ShowError;
use crate::Source;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShowEvent {
    RoleAssigned {
        role: Role,
    },
    WentLive,
    SceneStarted {
        scene_id: u64,
        suggestion: String,
    },
    SceneEnded {
        scene_id: u64,
    },
    LineEnqueued {
        utterance_id: u64,
        performer: PerformerId,
        text: String,
        source: Source,
        scene_id: u64,
        created_at: u64,
        interrupting: bool,
    },
    LineDelivered {
        utterance_id: u64,
    },
    LineSkipped {
        utterance_id: u64,
    },
    LineSpoken {
        utterance_id: u64,
    },
    VotingOpened,
    BallotCast {
        voter: String,
        ballot: Ballot,
    },
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub seq: u64,
    /// Milliseconds since session start; never decreases along the log.
    pub at: u64,
    pub event: ShowEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryRecord {
    pub utterance_id: u64,
    pub performer: PerformerId,
    /// 0-based position in the performer's queue after enqueueing.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneSummary {
    pub scene: Scene,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShowSession {
    id: String,
    config: ShowConfig,
    state: SessionState,
    roster: BTreeMap<PerformerId, Role>,
    scenes: Vec<Scene>,
    open_scene: Option<usize>,
    utterances: BTreeMap<u64, Utterance>,
    queues: BTreeMap<PerformerId, VecDeque<u64>>,
    ballots: BTreeMap<String, (u64, Ballot)>,
    next_utterance_id: u64,
    log: Vec<LoggedEvent>,
}

fn wrong_state(expected: &'static str, actual: SessionState) -> ShowError {
    ShowError::WrongState { expected, actual }
}

impl ShowSession {
    pub fn new(id: impl Into<String>, config: ShowConfig) -> Self {
        Self {
            id: id.into(),
            config,
            state: SessionState::Setup,
            roster: BTreeMap::new(),
            scenes: Vec::new(),
            open_scene: None,
            utterances: BTreeMap::new(),
            queues: BTreeMap::new(),
            ballots: BTreeMap::new(),
            next_utterance_id: 1,
            log: Vec::new(),
        }
    }

    /// Rebuilds a session by replaying its event log.
    pub fn from_log(id: impl Into<String>, config: ShowConfig, log: &[LoggedEvent]) -> Result<Self, ShowError> {
        let mut session = Self::new(id, config);
        for logged in log {
            session.apply_logged(logged.clone())?;
        }
        Ok(session)
    }

    /// Appends an event produced elsewhere (a durable log, a replica). The
    /// sequence number must be the next one and time must not run backwards.
    pub fn apply_logged(&mut self, logged: LoggedEvent) -> Result<(), ShowError> {
        let corrupt = |msg: String| ShowError::CorruptLog { seq: logged.seq, msg };
        if logged.seq != self.log.len() as u64 {
            return Err(corrupt(format!("expected seq {}", self.log.len())));
        }
        if logged.at < self.last_at() {
            return Err(corrupt("timestamp runs backwards".into()));
        }
        self.apply(&logged.event, logged.at).map_err(|e| corrupt(e.to_string()))?;
        self.log.push(logged);
        Ok(())
    }

    // ---- queries -------------------------------------------------------

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &ShowConfig {
        &self.config
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn roster(&self) -> impl Iterator<Item = &Role> {
        self.roster.values()
    }

    pub fn role(&self, performer: &str) -> Option<&Role> {
        self.roster.get(performer)
    }

    pub fn performers_with(&self, kind: RoleKind) -> impl Iterator<Item = &Role> {
        self.roster.values().filter(move |r| r.kind == kind)
    }

    pub fn scenes(&self) -> &[Scene] {
        &self.scenes
    }

    pub fn open_scene(&self) -> Option<&Scene> {
        self.open_scene.map(|i| &self.scenes[i])
    }

    pub fn utterance(&self, id: u64) -> Option<&Utterance> {
        self.utterances.get(&id)
    }

    pub fn utterances(&self) -> impl Iterator<Item = &Utterance> {
        self.utterances.values()
    }

    /// Queued line ids for a performer, next to deliver first.
    pub fn queue(&self, performer: &str) -> Vec<u64> {
        self.queues
            .get(performer)
            .map(|q| q.iter().copied().collect())
            .unwrap_or_default()
    }

    pub fn log(&self) -> &[LoggedEvent] {
        &self.log
    }

    pub fn ballots(&self) -> impl Iterator<Item = (&str, u64, &Ballot)> {
        self.ballots.iter().map(|(voter, (at, b))| (voter.as_str(), *at, b))
    }

    pub fn next_utterance_id(&self) -> u64 {
        self.next_utterance_id
    }

    pub(super) fn set_next_utterance_id(&mut self, next: u64) {
        self.next_utterance_id = next;
    }

    pub fn last_at(&self) -> u64 {
        self.log.last().map_or(0, |e| e.at)
    }

    pub fn count_with_status(&self, status: UtteranceStatus) -> usize {
        self.utterances.values().filter(|u| u.status == status).count()
    }

    pub fn enqueued_count(&self) -> usize {
        self.utterances.len()
    }

    pub fn tally(&self) -> VoteTally {
        tally(self.roster.values(), self.ballots.values().map(|(_, b)| b))
    }

    pub fn latency_stats(&self) -> LatencyStats {
        LatencyStats::from_utterances(self.utterances.values())
    }

    // ---- commands ------------------------------------------------------

    pub fn assign_role(
        &mut self,
        performer: impl Into<PerformerId>,
        kind: RoleKind,
        secret: bool,
        now: u64,
    ) -> Result<&Role, ShowError> {
        if self.state != SessionState::Setup {
            return Err(wrong_state("setup", self.state));
        }
        let performer = performer.into();
        if self.roster.contains_key(&performer) {
            return Err(ShowError::DuplicatePerformer(performer));
        }
        let limit = match kind {
            RoleKind::CeoController => Some(self.config.ceo_controllers),
            RoleKind::PuppetMaster => Some(self.config.max_puppet_masters),
            _ => None,
        };
        if let Some(limit) = limit {
            if self.performers_with(kind).count() >= limit {
                return Err(ShowError::RoleLimit { kind, limit });
            }
        }
        let role = Role {
            performer_id: performer.clone(),
            kind,
            secret,
        };
        self.record(now, ShowEvent::RoleAssigned { role });
        Ok(&self.roster[&performer])
    }

    pub fn go_live(&mut self, now: u64) -> Result<(), ShowError> {
        if self.state != SessionState::Setup {
            return Err(wrong_state("setup", self.state));
        }
        let count = |kind| self.performers_with(kind).count();
        if count(RoleKind::Cyborg) + count(RoleKind::Puppet) == 0 {
            return Err(ShowError::RosterIncomplete("needs a Cyborg or a Puppet".into()));
        }
        if count(RoleKind::FreeWill) == 0 {
            return Err(ShowError::RosterIncomplete("needs a Free-will Human".into()));
        }
        if count(RoleKind::CeoController) != self.config.ceo_controllers {
            return Err(ShowError::RosterIncomplete(format!(
                "needs exactly {} CEO controller(s)",
                self.config.ceo_controllers
            )));
        }
        if count(RoleKind::Puppet) > 0 && count(RoleKind::PuppetMaster) == 0 {
            return Err(ShowError::RosterIncomplete("Puppets need a Puppet Master".into()));
        }
        self.record(now, ShowEvent::WentLive);
        Ok(())
    }

    pub fn start_scene(&mut self, suggestion: impl Into<String>, now: u64) -> Result<&Scene, ShowError> {
        if self.state != SessionState::Live {
            return Err(wrong_state("live", self.state));
        }
        if self.open_scene.is_some() {
            return Err(ShowError::SceneAlreadyOpen);
        }
        let scene_id = self.scenes.len() as u64 + 1;
        self.record(
            now,
            ShowEvent::SceneStarted {
                scene_id,
                suggestion: suggestion.into(),
            },
        );
        Ok(self.scenes.last().expect("scene just started"))
    }

    pub fn end_scene(&mut self, now: u64) -> Result<SceneSummary, ShowError> {
        if self.state != SessionState::Live {
            return Err(wrong_state("live", self.state));
        }
        let index = self.open_scene.ok_or(ShowError::NoOpenScene)?;
        let scene_id = self.scenes[index].id;
        self.record(now, ShowEvent::SceneEnded { scene_id });
        let scene = self.scenes[index].clone();
        let duration_ms = scene.duration_ms().expect("scene just ended");
        Ok(SceneSummary { scene, duration_ms })
    }

    fn line_receiver(&self, performer: &str) -> Result<&Role, ShowError> {
        let role = self
            .roster
            .get(performer)
            .ok_or_else(|| ShowError::UnknownPerformer(performer.to_string()))?;
        if !role.kind.receives_lines() {
            return Err(ShowError::CannotReceiveLines(performer.to_string()));
        }
        Ok(role)
    }

    /// Queues a line for a Cyborg or Puppet. An interrupting line jumps to
    /// the front of the queue.
    pub fn enqueue_line(
        &mut self,
        performer: &str,
        draft: LineDraft,
        interrupting: bool,
        now: u64,
    ) -> Result<DeliveryRecord, ShowError> {
        if self.state != SessionState::Live {
            return Err(wrong_state("live", self.state));
        }
        self.line_receiver(performer)?;
        let scene_id = self.open_scene().ok_or(ShowError::NoOpenScene)?.id;
        let utterance_id = self.next_utterance_id;
        let at = now.max(self.last_at());
        self.record(
            now,
            ShowEvent::LineEnqueued {
                utterance_id,
                performer: performer.to_string(),
                text: draft.text,
                source: draft.source,
                scene_id,
                created_at: draft.created_at.min(at),
                interrupting,
            },
        );
        let position = self.queues[performer]
            .iter()
            .position(|&id| id == utterance_id)
            .expect("line just queued");
        Ok(DeliveryRecord {
            utterance_id,
            performer: performer.to_string(),
            position,
        })
    }

    /// Hands the head of the performer's queue to their device.
    pub fn next_line(&mut self, performer: &str, now: u64) -> Result<Option<Utterance>, ShowError> {
        if self.state != SessionState::Live {
            return Err(wrong_state("live", self.state));
        }
        self.line_receiver(performer)?;
        let Some(&utterance_id) = self.queues[performer].front() else {
            return Ok(None);
        };
        self.record(now, ShowEvent::LineDelivered { utterance_id });
        Ok(Some(self.utterances[&utterance_id].clone()))
    }

    /// Drops a line that has not been delivered yet. It stays in the log but
    /// never reaches the spoken transcript.
    pub fn skip_line(&mut self, performer: &str, utterance_id: u64, now: u64) -> Result<Utterance, ShowError> {
        if self.state != SessionState::Live {
            return Err(wrong_state("live", self.state));
        }
        self.line_receiver(performer)?;
        let line = self
            .utterances
            .get(&utterance_id)
            .filter(|u| u.performer == performer)
            .ok_or(ShowError::UnknownUtterance(utterance_id))?;
        if line.status != UtteranceStatus::Queued {
            return Err(ShowError::WrongLineStatus {
                id: utterance_id,
                status: line.status,
                expected: UtteranceStatus::Queued,
            });
        }
        self.record(now, ShowEvent::LineSkipped { utterance_id });
        Ok(self.utterances[&utterance_id].clone())
    }

    /// Device report that a delivered line was spoken.
    pub fn acknowledge_spoken(&mut self, performer: &str, utterance_id: u64, now: u64) -> Result<(), ShowError> {
        let line = self
            .utterances
            .get(&utterance_id)
            .filter(|u| u.performer == performer)
            .ok_or(ShowError::UnknownUtterance(utterance_id))?;
        if line.status != UtteranceStatus::Delivered {
            return Err(ShowError::WrongLineStatus {
                id: utterance_id,
                status: line.status,
                expected: UtteranceStatus::Delivered,
            });
        }
        if line.spoken_ack_at.is_some() {
            return Err(ShowError::AlreadySpoken(utterance_id));
        }
        self.record(now, ShowEvent::LineSpoken { utterance_id });
        Ok(())
    }

    pub fn open_voting(&mut self, now: u64) -> Result<(), ShowError> {
        if self.state != SessionState::Live {
            return Err(wrong_state("live", self.state));
        }
        if self.open_scene.is_some() {
            return Err(ShowError::SceneAlreadyOpen);
        }
        self.record(now, ShowEvent::VotingOpened);
        Ok(())
    }

    pub fn submit_vote(&mut self, voter: &str, ballot: Ballot, now: u64) -> Result<(), ShowError> {
        if self.state != SessionState::Voting {
            return Err(wrong_state("voting", self.state));
        }
        if self.ballots.contains_key(voter) {
            return Err(ShowError::DuplicateBallot(voter.to_string()));
        }
        if ballot.is_empty() {
            return Err(ShowError::InvalidBallot("ballot is empty".into()));
        }
        for (performer, guess) in &ballot {
            match self.roster.get(performer) {
                Some(role) if role.kind.on_stage() => {}
                _ => {
                    return Err(ShowError::InvalidBallot(format!("`{performer}` is not an on-stage performer")))
                }
            }
            if !guess.on_stage() {
                return Err(ShowError::InvalidBallot(format!("guess for `{performer}` is not a stage role")));
            }
        }
        self.record(
            now,
            ShowEvent::BallotCast {
                voter: voter.to_string(),
                ballot,
            },
        );
        Ok(())
    }

    pub fn close(&mut self, now: u64) -> Result<(), ShowError> {
        if self.state != SessionState::Voting {
            return Err(wrong_state("voting", self.state));
        }
        self.record(now, ShowEvent::Closed);
        Ok(())
    }

    // ---- event application ---------------------------------------------

    fn record(&mut self, now: u64, event: ShowEvent) -> &LoggedEvent {
        let logged = LoggedEvent {
            seq: self.log.len() as u64,
            at: now.max(self.last_at()),
            event,
        };
        // commands validate before recording
        self.apply(&logged.event, logged.at).expect("validated event applies");
        self.log.push(logged);
        self.log.last().expect("just pushed")
    }

    fn apply(&mut self, event: &ShowEvent, at: u64) -> Result<(), ShowError> {
        match event {
            ShowEvent::RoleAssigned { role } => {
                if self.roster.contains_key(&role.performer_id) {
                    return Err(ShowError::DuplicatePerformer(role.performer_id.clone()));
                }
                if role.kind.receives_lines() {
                    self.queues.insert(role.performer_id.clone(), VecDeque::new());
                }
                self.roster.insert(role.performer_id.clone(), role.clone());
            }
            ShowEvent::WentLive => self.transition(SessionState::Setup, SessionState::Live)?,
            ShowEvent::SceneStarted { scene_id, suggestion } => {
                if self.open_scene.is_some() {
                    return Err(ShowError::SceneAlreadyOpen);
                }
                self.scenes.push(Scene {
                    id: *scene_id,
                    suggestion: suggestion.clone(),
                    started_at: at,
                    ended_at: None,
                    turns: Vec::new(),
                });
                self.open_scene = Some(self.scenes.len() - 1);
            }
            ShowEvent::SceneEnded { scene_id } => {
                let index = self.open_scene.take().ok_or(ShowError::NoOpenScene)?;
                if self.scenes[index].id != *scene_id {
                    return Err(ShowError::NoOpenScene);
                }
                self.scenes[index].ended_at = Some(at);
            }
            ShowEvent::LineEnqueued {
                utterance_id,
                performer,
                text,
                source,
                scene_id,
                created_at,
                interrupting,
            } => {
                let queue = self
                    .queues
                    .get_mut(performer)
                    .ok_or_else(|| ShowError::CannotReceiveLines(performer.clone()))?;
                if self.utterances.contains_key(utterance_id) {
                    return Err(ShowError::UnknownUtterance(*utterance_id));
                }
                if *interrupting {
                    queue.push_front(*utterance_id);
                } else {
                    queue.push_back(*utterance_id);
                }
                self.utterances.insert(
                    *utterance_id,
                    Utterance {
                        id: *utterance_id,
                        text: text.clone(),
                        source: *source,
                        performer: performer.clone(),
                        scene_id: *scene_id,
                        created_at: *created_at,
                        delivered_at: None,
                        spoken_ack_at: None,
                        status: UtteranceStatus::Queued,
                        interrupting: *interrupting,
                    },
                );
                self.next_utterance_id = self.next_utterance_id.max(utterance_id + 1);
            }
            ShowEvent::LineDelivered { utterance_id } => {
                let scene_id = self.dequeue(*utterance_id)?;
                let line = self.utterances.get_mut(utterance_id).expect("dequeued line exists");
                line.status = UtteranceStatus::Delivered;
                line.delivered_at = Some(at);
                if let Some(scene) = self.scenes.iter_mut().find(|s| s.id == scene_id) {
                    scene.turns.push(*utterance_id);
                }
            }
            ShowEvent::LineSkipped { utterance_id } => {
                self.dequeue(*utterance_id)?;
                let line = self.utterances.get_mut(utterance_id).expect("dequeued line exists");
                line.status = UtteranceStatus::Skipped;
            }
            ShowEvent::LineSpoken { utterance_id } => {
                let line = self
                    .utterances
                    .get_mut(utterance_id)
                    .ok_or(ShowError::UnknownUtterance(*utterance_id))?;
                if line.status != UtteranceStatus::Delivered {
                    return Err(ShowError::WrongLineStatus {
                        id: *utterance_id,
                        status: line.status,
                        expected: UtteranceStatus::Delivered,
                    });
                }
                line.spoken_ack_at = Some(at);
            }
            ShowEvent::VotingOpened => self.transition(SessionState::Live, SessionState::Voting)?,
            ShowEvent::BallotCast { voter, ballot } => {
                if self.ballots.insert(voter.clone(), (at, ballot.clone())).is_some() {
                    return Err(ShowError::DuplicateBallot(voter.clone()));
                }
            }
            ShowEvent::Closed => self.transition(SessionState::Voting, SessionState::Closed)?,
        }
        Ok(())
    }

    fn transition(&mut self, from: SessionState, to: SessionState) -> Result<(), ShowError> {
        if self.state != from {
            return Err(ShowError::WrongState {
                expected: match from {
                    SessionState::Setup => "setup",
                    SessionState::Live => "live",
                    SessionState::Voting => "voting",
                    SessionState::Closed => "closed",
                },
                actual: self.state,
            });
        }
        self.state = to;
        Ok(())
    }

    /// Removes a queued line wherever it sits; returns its scene id.
    fn dequeue(&mut self, utterance_id: u64) -> Result<u64, ShowError> {
        let line = self
            .utterances
            .get(&utterance_id)
            .ok_or(ShowError::UnknownUtterance(utterance_id))?;
        if line.status != UtteranceStatus::Queued {
            return Err(ShowError::WrongLineStatus {
                id: utterance_id,
                status: line.status,
                expected: UtteranceStatus::Queued,
            });
        }
        let queue = self.queues.get_mut(&line.performer).expect("queued line has a queue");
        let pos = queue
            .iter()
            .position(|&id| id == utterance_id)
            .ok_or(ShowError::UnknownUtterance(utterance_id))?;
        queue.remove(pos);
        Ok(line.scene_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draft(text: &str, at: u64) -> LineDraft {
        LineDraft {
            text: text.into(),
            source: Source::PuppetMaster,
            created_at: at,
        }
    }

    fn paper_roster() -> ShowSession {
        let mut s = ShowSession::new("s", ShowConfig::default());
        s.assign_role("cy", RoleKind::Cyborg, true, 0).unwrap();
        s.assign_role("pu", RoleKind::Puppet, true, 0).unwrap();
        s.assign_role("fw1", RoleKind::FreeWill, true, 0).unwrap();
        s.assign_role("fw2", RoleKind::FreeWill, true, 0).unwrap();
        s.assign_role("ceo", RoleKind::CeoController, false, 0).unwrap();
        s.assign_role("pm", RoleKind::PuppetMaster, false, 0).unwrap();
        s
    }

    fn live_in_scene() -> ShowSession {
        let mut s = paper_roster();
        s.go_live(0).unwrap();
        s.start_scene("a ship", 10).unwrap();
        s
    }

    #[test]
    fn full_roster_goes_live() {
        let mut s = paper_roster();
        s.go_live(5).unwrap();
        assert_eq!(s.state(), SessionState::Live);
        assert!(matches!(
            s.assign_role("late", RoleKind::FreeWill, true, 6),
            Err(ShowError::WrongState { .. })
        ));
    }

    #[test]
    fn second_ceo_rejected() {
        let mut s = paper_roster();
        assert!(matches!(
            s.assign_role("ceo2", RoleKind::CeoController, false, 0),
            Err(ShowError::RoleLimit { kind: RoleKind::CeoController, limit: 1 })
        ));
        assert!(matches!(
            s.assign_role("cy", RoleKind::FreeWill, true, 0),
            Err(ShowError::DuplicatePerformer(_))
        ));
    }

    #[test]
    fn go_live_needs_free_will() {
        let mut s = ShowSession::new("s", ShowConfig::default());
        s.assign_role("cy", RoleKind::Cyborg, true, 0).unwrap();
        s.assign_role("ceo", RoleKind::CeoController, false, 0).unwrap();
        assert!(matches!(s.go_live(1), Err(ShowError::RosterIncomplete(_))));
        s.assign_role("fw", RoleKind::FreeWill, true, 0).unwrap();
        s.go_live(1).unwrap();
    }

    #[test]
    fn go_live_needs_fed_performer_and_controllers() {
        let mut s = ShowSession::new("s", ShowConfig::default());
        s.assign_role("fw", RoleKind::FreeWill, true, 0).unwrap();
        s.assign_role("ceo", RoleKind::CeoController, false, 0).unwrap();
        assert!(s.go_live(0).is_err());
        s.assign_role("pu", RoleKind::Puppet, true, 0).unwrap();
        assert!(s.go_live(0).is_err());
        s.assign_role("pm", RoleKind::PuppetMaster, false, 0).unwrap();
        s.go_live(0).unwrap();
    }

    #[test]
    fn scene_lifecycle() {
        let mut s = paper_roster();
        s.go_live(0).unwrap();
        assert!(matches!(s.end_scene(1), Err(ShowError::NoOpenScene)));
        let scene = s.start_scene("non-geographical location", 1_000).unwrap();
        assert_eq!(scene.suggestion, "non-geographical location");
        assert!(matches!(s.start_scene("again", 2_000), Err(ShowError::SceneAlreadyOpen)));
        let summary = s.end_scene(241_000).unwrap();
        assert_eq!(summary.duration_ms, 240_000);
        assert!((180_000..=360_000).contains(&summary.duration_ms));
    }

    #[test]
    fn fifo_delivery() {
        let mut s = live_in_scene();
        let a = s.enqueue_line("pu", draft("A", 20), false, 20).unwrap();
        let b = s.enqueue_line("pu", draft("B", 21), false, 21).unwrap();
        assert_eq!((a.position, b.position), (0, 1));
        assert_eq!(s.next_line("pu", 30).unwrap().unwrap().text, "A");
        assert_eq!(s.next_line("pu", 31).unwrap().unwrap().text, "B");
        assert!(s.next_line("pu", 32).unwrap().is_none());
    }

    #[test]
    fn skip_removes_from_queue() {
        let mut s = live_in_scene();
        let a = s.enqueue_line("pu", draft("A", 20), false, 20).unwrap();
        s.enqueue_line("pu", draft("B", 21), false, 21).unwrap();
        let skipped = s.skip_line("pu", a.utterance_id, 22).unwrap();
        assert_eq!(skipped.status, UtteranceStatus::Skipped);
        assert_eq!(s.next_line("pu", 30).unwrap().unwrap().text, "B");
        assert_eq!(s.enqueued_count(), 2);
        assert_eq!(s.count_with_status(UtteranceStatus::Skipped), 1);
    }

    #[test]
    fn interrupting_line_jumps_queue() {
        let mut s = live_in_scene();
        s.enqueue_line("cy", draft("A", 20), false, 20).unwrap();
        let b = s.enqueue_line("cy", draft("B", 21), true, 21).unwrap();
        assert_eq!(b.position, 0);
        assert_eq!(s.next_line("cy", 30).unwrap().unwrap().text, "B");
    }

    #[test]
    fn delivery_errors() {
        let mut s = live_in_scene();
        assert!(matches!(
            s.enqueue_line("fw1", draft("no", 20), false, 20),
            Err(ShowError::CannotReceiveLines(_))
        ));
        assert!(matches!(
            s.enqueue_line("ghost", draft("no", 20), false, 20),
            Err(ShowError::UnknownPerformer(_))
        ));
        let a = s.enqueue_line("pu", draft("A", 20), false, 20).unwrap();
        s.next_line("pu", 25).unwrap();
        assert!(matches!(
            s.skip_line("pu", a.utterance_id, 26),
            Err(ShowError::WrongLineStatus { status: UtteranceStatus::Delivered, .. })
        ));
        // the line belongs to the Puppet, not the Cyborg
        assert!(matches!(s.skip_line("cy", a.utterance_id, 26), Err(ShowError::UnknownUtterance(_))));
    }

    #[test]
    fn enqueue_needs_open_scene() {
        let mut s = paper_roster();
        s.go_live(0).unwrap();
        assert!(matches!(
            s.enqueue_line("pu", draft("A", 1), false, 1),
            Err(ShowError::NoOpenScene)
        ));
    }

    #[test]
    fn spoken_acknowledgement() {
        let mut s = live_in_scene();
        let a = s.enqueue_line("pu", draft("A", 20), false, 20).unwrap();
        assert!(s.acknowledge_spoken("pu", a.utterance_id, 21).is_err());
        s.next_line("pu", 22).unwrap();
        s.acknowledge_spoken("pu", a.utterance_id, 23).unwrap();
        assert_eq!(s.utterance(a.utterance_id).unwrap().spoken_ack_at, Some(23));
        assert!(matches!(
            s.acknowledge_spoken("pu", a.utterance_id, 24),
            Err(ShowError::AlreadySpoken(_))
        ));
    }

    #[test]
    fn created_at_never_after_enqueue() {
        let mut s = live_in_scene();
        let rec = s.enqueue_line("pu", draft("A", 999), false, 50).unwrap();
        let line = s.next_line("pu", 60).unwrap().unwrap();
        assert_eq!(line.created_at, 50);
        assert!(line.delivered_at.unwrap() >= line.created_at);
        assert_eq!(rec.utterance_id, line.id);
    }

    #[test]
    fn clock_never_runs_backwards() {
        let mut s = live_in_scene();
        s.enqueue_line("pu", draft("A", 0), false, 500).unwrap();
        s.next_line("pu", 100).unwrap();
        let times: Vec<u64> = s.log().iter().map(|e| e.at).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*times.last().unwrap(), 500);
    }

    #[test]
    fn voting_rules() {
        let mut s = live_in_scene();
        let ballot: Ballot = [("cy".to_string(), RoleKind::Cyborg)].into();
        assert!(matches!(s.submit_vote("v1", ballot.clone(), 20), Err(ShowError::WrongState { .. })));
        assert!(matches!(s.open_voting(20), Err(ShowError::SceneAlreadyOpen)));
        s.end_scene(30).unwrap();
        s.open_voting(40).unwrap();
        s.submit_vote("v1", ballot.clone(), 41).unwrap();
        assert!(matches!(s.submit_vote("v1", ballot, 42), Err(ShowError::DuplicateBallot(_))));
        let off_stage: Ballot = [("ceo".to_string(), RoleKind::Cyborg)].into();
        assert!(matches!(s.submit_vote("v2", off_stage, 43), Err(ShowError::InvalidBallot(_))));
        let bad_guess: Ballot = [("cy".to_string(), RoleKind::PuppetMaster)].into();
        assert!(matches!(s.submit_vote("v3", bad_guess, 43), Err(ShowError::InvalidBallot(_))));
        assert!(matches!(s.submit_vote("v4", Ballot::new(), 43), Err(ShowError::InvalidBallot(_))));
        s.close(50).unwrap();
        assert_eq!(s.state(), SessionState::Closed);
        assert!(s.close(51).is_err());
    }

    #[test]
    fn log_replay_reconstructs_state() {
        let mut s = live_in_scene();
        let a = s.enqueue_line("pu", draft("A", 20), false, 20).unwrap();
        s.enqueue_line("pu", draft("B", 21), true, 21).unwrap();
        s.enqueue_line("cy", draft("C", 22), false, 22).unwrap();
        s.skip_line("pu", a.utterance_id, 23).unwrap();
        s.next_line("pu", 24).unwrap();
        s.end_scene(30).unwrap();
        let replayed = ShowSession::from_log("s", *s.config(), s.log()).unwrap();
        assert_eq!(replayed, s);
    }

    #[test]
    fn corrupt_logs_are_rejected() {
        let s = live_in_scene();
        let mut log = s.log().to_vec();
        log.swap(0, 1);
        assert!(matches!(
            ShowSession::from_log("s", *s.config(), &log),
            Err(ShowError::CorruptLog { seq: 1, .. })
        ));
        let mut log = s.log().to_vec();
        log.push(LoggedEvent {
            seq: log.len() as u64,
            at: 100,
            event: ShowEvent::LineDelivered { utterance_id: 99 },
        });
        assert!(ShowSession::from_log("s", *s.config(), &log).is_err());
    }
}
