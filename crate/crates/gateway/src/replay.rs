use std::collections::BTreeMap;
use std::path::Path;

use earpiece_core::analytics::{compare_report, group_stats, CiConfig, ComparisonReport, Resources};
use earpiece_core::show::{LatencyStats, SessionState, ShowSession, Transcript, VoteTally};
use earpiece_core::Source;
use serde::{Deserialize, Serialize};

use crate::GatewayError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneLine {
    pub scene_id: u64,
    pub suggestion: String,
    pub duration_ms: Option<u64>,
    pub turns: usize,
}

/// Everything recomputed from a show's history, identical whether it comes
/// from the live session or from its exported transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShowSummary {
    pub session_id: String,
    pub state: SessionState,
    pub scenes: Vec<SceneLine>,
    pub delivered_by_source: BTreeMap<Source, usize>,
    pub latency: LatencyStats,
    /// Median delivery latency above one second.
    pub slower_than_one_second: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tally: Option<VoteTally>,
    pub analytics: ComparisonReport,
}

impl ShowSummary {
    pub fn from_session(session: &ShowSession, resources: &Resources, ci: &CiConfig) -> Self {
        let delivered: Vec<(Source, String)> = session
            .scenes()
            .iter()
            .flat_map(|s| s.turns.iter())
            .filter_map(|id| session.utterance(*id))
            .map(|u| (u.source, u.text.clone()))
            .collect();
        let mut delivered_by_source = BTreeMap::new();
        for (source, _) in &delivered {
            *delivered_by_source.entry(*source).or_insert(0) += 1;
        }
        let latency = session.latency_stats();
        Self {
            session_id: session.id().to_string(),
            state: session.state(),
            scenes: session
                .scenes()
                .iter()
                .map(|s| SceneLine {
                    scene_id: s.id,
                    suggestion: s.suggestion.clone(),
                    duration_ms: s.duration_ms(),
                    turns: s.turns.len(),
                })
                .collect(),
            delivered_by_source,
            slower_than_one_second: latency.median_s.map(|m| m > 1.0),
            latency,
            tally: (session.state() >= SessionState::Voting).then(|| session.tally()),
            analytics: compare_report(&group_stats(&delivered, resources, ci)),
        }
    }
}

/// Parses a transcript and rebuilds its session.
pub fn replay_transcript(text: &str) -> Result<(Transcript, ShowSession), GatewayError> {
    let transcript = Transcript::from_json(text).map_err(|e| GatewayError::Data(e.to_string()))?;
    let session = transcript.replay().map_err(|e| GatewayError::Data(e.to_string()))?;
    Ok((transcript, session))
}

pub fn replay_file(path: &Path, resources: &Resources, ci: &CiConfig) -> Result<ShowSummary, GatewayError> {
    let text = std::fs::read_to_string(path).map_err(|e| GatewayError::Data(format!("{}: {e}", path.display())))?;
    let (_, session) = replay_transcript(&text).map_err(|e| GatewayError::Data(format!("{}: {e}", path.display())))?;
    Ok(ShowSummary::from_session(&session, resources, ci))
}
