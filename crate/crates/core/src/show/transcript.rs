use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::session::{LoggedEvent, ShowEvent, ShowSession};
use super::types::{Ballot, PerformerId, Role, SessionState, ShowConfig, UtteranceStatus};
use super::ShowError;
use crate::Source;

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("malformed transcript: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("inconsistent transcript: {0}")]
    Invalid(String),
    #[error(transparent)]
    Show(#[from] ShowError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptConfig {
    #[serde(flatten)]
    pub show: ShowConfig,
    pub roster: Vec<Role>,
}

/// Spoken line counts per source, written ahead of the scenes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub lines_by_source: BTreeMap<Source, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptUtterance {
    pub id: u64,
    pub text: String,
    pub source: Source,
    pub performer: PerformerId,
    pub created_at: u64,
    pub delivered_at: Option<u64>,
    pub spoken_at: Option<u64>,
    pub status: UtteranceStatus,
    pub interrupting: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptScene {
    pub id: u64,
    pub suggestion: String,
    pub started_at: u64,
    pub ended_at: Option<u64>,
    /// Delivered lines in delivery order, then lines still queued.
    pub utterances: Vec<TranscriptUtterance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptVote {
    pub voter: String,
    pub cast_at: u64,
    pub guesses: Ballot,
}

/// Exported show: every line that was not skipped, with timestamps in
/// milliseconds since session start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transcript {
    pub session_id: String,
    pub state: SessionState,
    pub manifest: Manifest,
    pub config: TranscriptConfig,
    pub next_utterance_id: u64,
    pub scenes: Vec<TranscriptScene>,
    pub voting_opened_at: Option<u64>,
    pub closed_at: Option<u64>,
    pub votes: Vec<TranscriptVote>,
}

impl Transcript {
    pub fn from_session(session: &ShowSession) -> Result<Self, ShowError> {
        let state = session.state();
        if !matches!(state, SessionState::Voting | SessionState::Closed) {
            return Err(ShowError::WrongState {
                expected: "voting or closed",
                actual: state,
            });
        }
        let line = |id: u64| {
            let u = session.utterance(id).expect("scene turn refers to a known line");
            TranscriptUtterance {
                id: u.id,
                text: u.text.clone(),
                source: u.source,
                performer: u.performer.clone(),
                created_at: u.created_at,
                delivered_at: u.delivered_at,
                spoken_at: u.spoken_ack_at,
                status: u.status,
                interrupting: u.interrupting,
            }
        };
        let scenes: Vec<TranscriptScene> = session
            .scenes()
            .iter()
            .map(|scene| {
                let mut utterances: Vec<TranscriptUtterance> = scene.turns.iter().map(|&id| line(id)).collect();
                utterances.extend(
                    session
                        .utterances()
                        .filter(|u| u.scene_id == scene.id && u.status == UtteranceStatus::Queued)
                        .map(|u| line(u.id)),
                );
                TranscriptScene {
                    id: scene.id,
                    suggestion: scene.suggestion.clone(),
                    started_at: scene.started_at,
                    ended_at: scene.ended_at,
                    utterances,
                }
            })
            .collect();
        let event_time = |wanted: fn(&ShowEvent) -> bool| session.log().iter().find(|e| wanted(&e.event)).map(|e| e.at);
        Ok(Self {
            session_id: session.id().to_string(),
            state,
            manifest: manifest_of(&scenes),
            config: TranscriptConfig {
                show: *session.config(),
                roster: session.roster().cloned().collect(),
            },
            next_utterance_id: session.next_utterance_id(),
            scenes,
            voting_opened_at: event_time(|e| matches!(e, ShowEvent::VotingOpened)),
            closed_at: event_time(|e| matches!(e, ShowEvent::Closed)),
            votes: session
                .ballots()
                .map(|(voter, cast_at, guesses)| TranscriptVote {
                    voter: voter.to_string(),
                    cast_at,
                    guesses: guesses.clone(),
                })
                .collect(),
        })
    }

    /// Pretty JSON with a trailing newline. Equal transcripts produce equal
    /// bytes.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("transcript serializes");
        out.push('\n');
        out
    }

    /// Parses a transcript and checks its manifest against its lines.
    pub fn from_json(text: &str) -> Result<Self, TranscriptError> {
        let transcript: Self = serde_json::from_str(text)?;
        let counted = manifest_of(&transcript.scenes);
        if counted != transcript.manifest {
            return Err(TranscriptError::Invalid(format!(
                "manifest {:?} does not match line counts {:?}",
                transcript.manifest.lines_by_source, counted.lines_by_source
            )));
        }
        Ok(transcript)
    }

    pub fn utterances(&self) -> impl Iterator<Item = &TranscriptUtterance> {
        self.scenes.iter().flat_map(|s| s.utterances.iter())
    }

    /// Rebuilds a session whose export equals this transcript.
    pub fn replay(&self) -> Result<ShowSession, TranscriptError> {
        if !matches!(self.state, SessionState::Voting | SessionState::Closed) {
            return Err(TranscriptError::Invalid(format!("transcript state is {}", self.state)));
        }
        let opened = self
            .voting_opened_at
            .ok_or_else(|| TranscriptError::Invalid("voting_opened_at missing".into()))?;
        let closed = match (self.state, self.closed_at) {
            (SessionState::Closed, Some(at)) => Some(at),
            (SessionState::Voting, None) => None,
            _ => return Err(TranscriptError::Invalid("closed_at does not match state".into())),
        };

        // (at, phase, scene, step, order) keeps ties in a valid order.
        type Key = (u64, u8, u64, u8, usize);
        let mut events: Vec<(Key, ShowEvent)> = Vec::new();
        for (i, role) in self.config.roster.iter().enumerate() {
            events.push(((0, 0, 0, 0, i), ShowEvent::RoleAssigned { role: role.clone() }));
        }
        events.push(((0, 0, 0, 1, 0), ShowEvent::WentLive));
        let mut order = 0;
        for scene in &self.scenes {
            events.push((
                (scene.started_at, 1, scene.id, 0, 0),
                ShowEvent::SceneStarted {
                    scene_id: scene.id,
                    suggestion: scene.suggestion.clone(),
                },
            ));
            if let Some(end) = scene.ended_at {
                events.push(((end, 1, scene.id, 4, 0), ShowEvent::SceneEnded { scene_id: scene.id }));
            }
            for u in &scene.utterances {
                order += 1;
                if u.status == UtteranceStatus::Skipped {
                    return Err(TranscriptError::Invalid(format!("utterance {} is skipped", u.id)));
                }
                events.push((
                    (u.created_at.max(scene.started_at), 1, scene.id, 1, order),
                    ShowEvent::LineEnqueued {
                        utterance_id: u.id,
                        performer: u.performer.clone(),
                        text: u.text.clone(),
                        source: u.source,
                        scene_id: scene.id,
                        created_at: u.created_at,
                        interrupting: u.interrupting,
                    },
                ));
                match (u.status, u.delivered_at) {
                    (UtteranceStatus::Delivered, Some(at)) => {
                        events.push(((at, 1, scene.id, 2, order), ShowEvent::LineDelivered { utterance_id: u.id }));
                        if let Some(spoken) = u.spoken_at {
                            events.push((
                                (spoken, 1, scene.id, 3, order),
                                ShowEvent::LineSpoken { utterance_id: u.id },
                            ));
                        }
                    }
                    (UtteranceStatus::Queued, None) if u.spoken_at.is_none() => {}
                    _ => {
                        return Err(TranscriptError::Invalid(format!(
                            "utterance {} has inconsistent delivery fields",
                            u.id
                        )))
                    }
                }
            }
        }
        events.push(((opened, 2, 0, 0, 0), ShowEvent::VotingOpened));
        for (i, vote) in self.votes.iter().enumerate() {
            events.push((
                (vote.cast_at, 3, 0, 0, i),
                ShowEvent::BallotCast {
                    voter: vote.voter.clone(),
                    ballot: vote.guesses.clone(),
                },
            ));
        }
        if let Some(at) = closed {
            events.push(((at, 4, 0, 0, 0), ShowEvent::Closed));
        }
        events.sort_by_key(|(key, _)| *key);

        let mut session = ShowSession::new(self.session_id.clone(), self.config.show);
        for (seq, ((at, ..), event)) in events.into_iter().enumerate() {
            session.apply_logged(LoggedEvent {
                seq: seq as u64,
                at,
                event,
            })?;
        }
        if self.next_utterance_id < session.next_utterance_id() {
            return Err(TranscriptError::Invalid("next_utterance_id is behind the lines".into()));
        }
        session.set_next_utterance_id(self.next_utterance_id);
        Ok(session)
    }
}

fn manifest_of(scenes: &[TranscriptScene]) -> Manifest {
    let mut lines_by_source = BTreeMap::new();
    for u in scenes.iter().flat_map(|s| &s.utterances) {
        *lines_by_source.entry(u.source).or_insert(0) += 1;
    }
    Manifest { lines_by_source }
}
