use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::{Ballot, PerformerId, Role, RoleKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformerTally {
    pub true_role: RoleKind,
    /// Guess counts over the on-stage roles, zero entries included.
    pub counts: BTreeMap<RoleKind, usize>,
    /// Ballots that mention this performer.
    pub ballots: usize,
}

impl PerformerTally {
    /// The most guessed role, or `None` without ballots or on a tie.
    pub fn majority_guess(&self) -> Option<RoleKind> {
        let top = *self.counts.values().max()?;
        if top == 0 {
            return None;
        }
        let mut leaders = self.counts.iter().filter(|(_, &c)| c == top);
        let (&kind, _) = leaders.next()?;
        leaders.next().is_none().then_some(kind)
    }

    pub fn correct(&self) -> usize {
        self.counts.get(&self.true_role).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteTally {
    pub ballots: usize,
    pub performers: BTreeMap<PerformerId, PerformerTally>,
    /// Fraction of guesses about performers of each true role that were
    /// right; `None` when nobody guessed about that role.
    pub accuracy: BTreeMap<RoleKind, Option<f64>>,
}

impl VoteTally {
    pub fn majority_guess(&self, performer: &str) -> Option<RoleKind> {
        self.performers.get(performer)?.majority_guess()
    }

    /// True when some Free-will Human was majority-guessed as a Cyborg.
    pub fn free_will_taken_for_cyborg(&self) -> bool {
        self.performers
            .values()
            .any(|p| p.true_role == RoleKind::FreeWill && p.majority_guess() == Some(RoleKind::Cyborg))
    }
}

/// Tallies ballots against the roster. Only on-stage performers appear; the
/// result does not depend on ballot order.
pub fn tally<'a, 'b>(
    roster: impl IntoIterator<Item = &'a Role>,
    ballots: impl IntoIterator<Item = &'b Ballot>,
) -> VoteTally {
    let mut performers: BTreeMap<PerformerId, PerformerTally> = roster
        .into_iter()
        .filter(|r| r.kind.on_stage())
        .map(|r| {
            let counts = RoleKind::ON_STAGE.iter().map(|&k| (k, 0)).collect();
            (
                r.performer_id.clone(),
                PerformerTally {
                    true_role: r.kind,
                    counts,
                    ballots: 0,
                },
            )
        })
        .collect();
    let mut n = 0;
    for ballot in ballots {
        n += 1;
        for (performer, guess) in ballot {
            if let Some(entry) = performers.get_mut(performer) {
                *entry.counts.entry(*guess).or_insert(0) += 1;
                entry.ballots += 1;
            }
        }
    }
    let accuracy = RoleKind::ON_STAGE
        .iter()
        .map(|&kind| {
            let (right, total) = performers
                .values()
                .filter(|p| p.true_role == kind)
                .fold((0, 0), |(r, t), p| (r + p.correct(), t + p.ballots));
            (kind, (total > 0).then(|| right as f64 / total as f64))
        })
        .collect();
    VoteTally {
        ballots: n,
        performers,
        accuracy,
    }
}

/// Share of shows in which a Free-will Human was majority-guessed as a
/// Cyborg. `None` for no shows.
pub fn misidentification_rate(shows: &[VoteTally]) -> Option<f64> {
    if shows.is_empty() {
        return None;
    }
    let hits = shows.iter().filter(|t| t.free_will_taken_for_cyborg()).count();
    Some(hits as f64 / shows.len() as f64)
}

/// Roster and ballots of one finished show, as stored in vote fixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShowBallots {
    pub name: String,
    pub roster: Vec<Role>,
    pub ballots: Vec<Ballot>,
}

impl ShowBallots {
    pub fn tally(&self) -> VoteTally {
        tally(&self.roster, &self.ballots)
    }
}
