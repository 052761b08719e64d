//! One generation round for the controller: sample candidates, drop the
//! offensive and duplicate ones, rank by log-likelihood, present the top few,
//! then record the controller's decision.

mod blocklist;

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use blocklist::Blocklist;

use crate::show::LineDraft;
use crate::textgen::{detokenize, tokenize, LanguageBackend, Token, TopicSet, DEFAULT_MAX_LEN};
use crate::Source;

pub const DEFAULT_N_GEN: usize = 10;
pub const DEFAULT_K_SHOW: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum CurationError {
    #[error("invalid curation parameters: n_gen {n_gen}, k_show {k_show}")]
    InvalidParams { n_gen: usize, k_show: usize },
    #[error("candidate set {0} is already resolved")]
    AlreadyResolved(u64),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// How candidates are ranked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Summed log-likelihood of the whole line.
    #[default]
    Sum,
    /// Log-likelihood divided by the number of scored events (tokens + end).
    PerToken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationConfig {
    pub n_gen: usize,
    pub k_show: usize,
    pub max_len: usize,
    pub score_mode: ScoreMode,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            n_gen: DEFAULT_N_GEN,
            k_show: DEFAULT_K_SHOW,
            max_len: DEFAULT_MAX_LEN,
            score_mode: ScoreMode::Sum,
        }
    }
}

impl CurationConfig {
    pub fn validate(&self) -> Result<(), CurationError> {
        if self.k_show == 0 || self.n_gen < self.k_show {
            return Err(CurationError::InvalidParams {
                n_gen: self.n_gen,
                k_show: self.k_show,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub offensive: bool,
    pub duplicate: bool,
}

impl Flags {
    pub fn filtered(&self) -> bool {
        self.offensive || self.duplicate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub score: f64,
    /// 1-based position among all generated candidates.
    pub rank: usize,
    pub flags: Flags,
    #[serde(skip)]
    tokens: Vec<Token>,
}

impl Candidate {
    pub fn new(tokens: Vec<Token>, score: f64) -> Self {
        Self {
            text: detokenize(&tokens),
            score,
            rank: 0,
            flags: Flags::default(),
            tokens,
        }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Pending,
    /// 1-based positions in the presented list, in selection order.
    Selected { positions: Vec<usize> },
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    /// 1-based positions in the presented list.
    Select { positions: Vec<usize> },
    Discard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub id: u64,
    pub context: String,
    pub topic: TopicSet,
    pub generated: Vec<Candidate>,
    /// Indices into `generated`, best first.
    pub presented: Vec<usize>,
    pub outcome: Outcome,
    pub created_at: u64,
}

impl CandidateSet {
    pub fn presented_candidates(&self) -> impl Iterator<Item = &Candidate> {
        self.presented.iter().map(|&i| &self.generated[i])
    }

    pub fn is_pending(&self) -> bool {
        self.outcome == Outcome::Pending
    }

    /// Applies the controller's decision. Selected candidates become AI lines
    /// stamped with the set's creation time, in selection order.
    pub fn resolve(&mut self, decision: &Decision) -> Result<Vec<LineDraft>, CurationError> {
        if !self.is_pending() {
            return Err(CurationError::AlreadyResolved(self.id));
        }
        match decision {
            Decision::Discard => {
                self.outcome = Outcome::Discarded;
                Ok(Vec::new())
            }
            Decision::Select { positions } => {
                if positions.is_empty() {
                    return Err(CurationError::InvalidSelection("nothing selected".into()));
                }
                let mut seen = BTreeSet::new();
                for &pos in positions {
                    if pos == 0 || pos > self.presented.len() {
                        return Err(CurationError::InvalidSelection(format!(
                            "position {pos} outside 1..={}",
                            self.presented.len()
                        )));
                    }
                    if !seen.insert(pos) {
                        return Err(CurationError::InvalidSelection(format!("position {pos} repeated")));
                    }
                }
                let drafts = positions
                    .iter()
                    .map(|&pos| LineDraft {
                        text: self.generated[self.presented[pos - 1]].text.clone(),
                        source: Source::Ai,
                        created_at: self.created_at,
                    })
                    .collect();
                self.outcome = Outcome::Selected {
                    positions: positions.clone(),
                };
                Ok(drafts)
            }
        }
    }
}

/// Flags every candidate containing a blocklisted word token.
pub fn filter_offensive(candidates: &mut [Candidate], blocklist: &Blocklist) {
    for candidate in candidates {
        candidate.flags.offensive = candidate
            .tokens
            .iter()
            .any(|t| t.is_word() && blocklist.contains(t.surface()));
    }
}

/// Flags later copies of a token sequence already seen among candidates that
/// survived the offensive filter.
pub fn filter_duplicates(candidates: &mut [Candidate]) {
    let mut seen: BTreeSet<Vec<Token>> = BTreeSet::new();
    for candidate in candidates.iter_mut().filter(|c| !c.flags.offensive) {
        candidate.flags.duplicate = !seen.insert(candidate.tokens.clone());
    }
}

/// Best first: higher score, then smaller text.
pub fn rank_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.text.cmp(&b.text))
}

/// Per-candidate RNG seed.
pub fn candidate_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Everything `propose` needs besides the backend.
#[derive(Debug, Clone)]
pub struct ProposeRequest<'a> {
    pub id: u64,
    pub context: &'a str,
    pub topic: &'a TopicSet,
    pub seed: u64,
    pub created_at: u64,
}

/// Runs one generation round. An empty `presented` list means every
/// candidate was filtered and the controller has to type a new context.
pub fn propose(
    backend: &dyn LanguageBackend,
    blocklist: &Blocklist,
    config: &CurationConfig,
    request: &ProposeRequest<'_>,
) -> Result<CandidateSet, CurationError> {
    config.validate()?;
    let context = tokenize(request.context);
    let mut generated: Vec<Candidate> = (0..config.n_gen)
        .map(|i| {
            let tokens = backend.generate(
                &context,
                request.topic,
                candidate_seed(request.seed, i),
                config.max_len,
            );
            let total = backend.score(&tokens);
            let score = match config.score_mode {
                ScoreMode::Sum => total,
                ScoreMode::PerToken => total / (tokens.len() + 1) as f64,
            };
            Candidate::new(tokens, score)
        })
        .collect();

    filter_offensive(&mut generated, blocklist);
    filter_duplicates(&mut generated);

    let mut order: Vec<usize> = (0..generated.len()).collect();
    order.sort_by(|&a, &b| rank_order(&generated[a], &generated[b]).then(a.cmp(&b)));
    for (rank, &i) in order.iter().enumerate() {
        generated[i].rank = rank + 1;
    }
    let presented = order
        .into_iter()
        .filter(|&i| !generated[i].flags.filtered())
        .take(config.k_show)
        .collect();

    Ok(CandidateSet {
        id: request.id,
        context: request.context.to_string(),
        topic: request.topic.clone(),
        generated,
        presented,
        outcome: Outcome::Pending,
        created_at: request.created_at,
    })
}
