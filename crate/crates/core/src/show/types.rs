use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::curation::{DEFAULT_K_SHOW, DEFAULT_N_GEN};
use crate::Source;

pub type PerformerId = String;

/// A performer's guess per on-stage performer.
pub type Ballot = BTreeMap<PerformerId, RoleKind>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RoleKind {
    Cyborg,
    Puppet,
    FreeWill,
    CeoController,
    PuppetMaster,
}

impl RoleKind {
    pub const ON_STAGE: [RoleKind; 3] = [RoleKind::Cyborg, RoleKind::Puppet, RoleKind::FreeWill];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleKind::Cyborg => "CYBORG",
            RoleKind::Puppet => "PUPPET",
            RoleKind::FreeWill => "FREE_WILL",
            RoleKind::CeoController => "CEO_CONTROLLER",
            RoleKind::PuppetMaster => "PUPPET_MASTER",
        }
    }

    pub fn on_stage(self) -> bool {
        Self::ON_STAGE.contains(&self)
    }

    /// Cyborgs and Puppets speak lines fed through the earpiece.
    pub fn receives_lines(self) -> bool {
        matches!(self, RoleKind::Cyborg | RoleKind::Puppet)
    }
}

impl fmt::Display for RoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Role {
    pub performer_id: PerformerId,
    pub kind: RoleKind,
    /// Hidden from the audience until voting closes.
    pub secret: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShowConfig {
    pub n_gen: usize,
    pub k_show: usize,
    /// Exact number of CEO controllers required to go live.
    pub ceo_controllers: usize,
    pub max_puppet_masters: usize,
    pub scale_min: u8,
    pub scale_max: u8,
}

impl Default for ShowConfig {
    fn default() -> Self {
        Self {
            n_gen: DEFAULT_N_GEN,
            k_show: DEFAULT_K_SHOW,
            ceo_controllers: 1,
            max_puppet_masters: 1,
            scale_min: 1,
            scale_max: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Setup,
    Live,
    Voting,
    Closed,
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionState::Setup => "setup",
            SessionState::Live => "live",
            SessionState::Voting => "voting",
            SessionState::Closed => "closed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtteranceStatus {
    Queued,
    Delivered,
    Skipped,
}

impl fmt::Display for UtteranceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UtteranceStatus::Queued => "queued",
            UtteranceStatus::Delivered => "delivered",
            UtteranceStatus::Skipped => "skipped",
        })
    }
}

/// A line on its way to a performer, before the session assigns it an id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineDraft {
    pub text: String,
    pub source: Source,
    /// When the triggering context was submitted (ms since session start).
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: u64,
    pub text: String,
    pub source: Source,
    pub performer: PerformerId,
    pub scene_id: u64,
    pub created_at: u64,
    pub delivered_at: Option<u64>,
    pub spoken_ack_at: Option<u64>,
    pub status: UtteranceStatus,
    pub interrupting: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scene {
    pub id: u64,
    pub suggestion: String,
    pub started_at: u64,
    pub ended_at: Option<u64>,
    /// Delivered utterance ids in delivery order.
    pub turns: Vec<u64>,
}

impl Scene {
    pub fn duration_ms(&self) -> Option<u64> {
        self.ended_at.map(|end| end - self.started_at)
    }
}
