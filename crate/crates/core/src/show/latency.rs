use serde::{Deserialize, Serialize};

use super::types::{Utterance, UtteranceStatus};

/// Median with the midpoint of the two central values for even counts.
/// `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceLatency {
    pub utterance_id: u64,
    pub seconds: f64,
}

/// Response times from context submission to delivery on the performer's
/// device. Empty when nothing was delivered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub median_s: Option<f64>,
    pub max_s: Option<f64>,
    pub per_utterance: Vec<UtteranceLatency>,
}

impl LatencyStats {
    pub fn from_utterances<'a>(utterances: impl IntoIterator<Item = &'a Utterance>) -> Self {
        let mut per_utterance: Vec<UtteranceLatency> = utterances
            .into_iter()
            .filter(|u| u.status == UtteranceStatus::Delivered)
            .filter_map(|u| {
                let delivered = u.delivered_at?;
                Some(UtteranceLatency {
                    utterance_id: u.id,
                    seconds: delivered.saturating_sub(u.created_at) as f64 / 1000.0,
                })
            })
            .collect();
        per_utterance.sort_by_key(|l| l.utterance_id);
        Self::from_latencies(per_utterance)
    }

    pub fn from_seconds(seconds: &[f64]) -> Self {
        Self::from_latencies(
            seconds
                .iter()
                .enumerate()
                .map(|(i, &s)| UtteranceLatency {
                    utterance_id: i as u64 + 1,
                    seconds: s,
                })
                .collect(),
        )
    }

    fn from_latencies(per_utterance: Vec<UtteranceLatency>) -> Self {
        let values: Vec<f64> = per_utterance.iter().map(|l| l.seconds).collect();
        Self {
            median_s: median(&values),
            max_s: values.iter().copied().reduce(f64::max),
            per_utterance,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.per_utterance.is_empty()
    }
}
