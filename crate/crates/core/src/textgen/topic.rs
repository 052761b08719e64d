use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::token::{tokenize, Token};

pub const DEFAULT_TOPIC_BONUS: f64 = 1.0;
pub const DEFAULT_TOPIC_SIZE: usize = 10;

/// Per-line word types of a training corpus, used to find words that share
/// lines with topic seeds.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CooccurrenceIndex {
    pub(crate) lines: Vec<Vec<String>>,
}

impl CooccurrenceIndex {
    pub fn from_lines<S: AsRef<str>>(corpus: &[S]) -> Self {
        let tokenized: Vec<Vec<Token>> = corpus
            .iter()
            .map(|line| tokenize(line.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        Self::from_tokenized(&tokenized)
    }

    pub(crate) fn from_tokenized(lines: &[Vec<Token>]) -> Self {
        let lines = lines
            .iter()
            .map(|tokens| {
                tokens
                    .iter()
                    .filter(|t| t.is_word())
                    .map(|t| t.surface().to_string())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect()
            })
            .collect();
        Self { lines }
    }

    pub fn lines(&self) -> &[Vec<String>] {
        &self.lines
    }

    /// For every non-seed word: the number of lines it shares with at least
    /// one seed.
    pub fn cooccurrence_counts(&self, seeds: &BTreeSet<String>) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        for line in &self.lines {
            if !line.iter().any(|w| seeds.contains(w)) {
                continue;
            }
            for word in line.iter().filter(|w| !seeds.contains(*w)) {
                *counts.entry(word.clone()).or_insert(0) += 1;
            }
        }
        counts
    }
}

/// Seed keywords plus related words, each with a weight in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSet {
    seeds: Vec<String>,
    expanded: BTreeMap<String, f64>,
    bonus: f64,
}

impl Default for TopicSet {
    fn default() -> Self {
        Self::none()
    }
}

impl TopicSet {
    /// Priming disabled.
    pub fn none() -> Self {
        Self {
            seeds: Vec::new(),
            expanded: BTreeMap::new(),
            bonus: DEFAULT_TOPIC_BONUS,
        }
    }

    /// Builds a topic from explicit weights. Seeds are forced to weight 1;
    /// other weights are clamped into `(0, 1]` and non-positive ones dropped.
    pub fn from_weights<I>(seeds: &[String], related: I, bonus: f64) -> Self
    where
        I: IntoIterator<Item = (String, f64)>,
    {
        let mut expanded: BTreeMap<String, f64> = related
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(word, w)| (word, w.min(1.0)))
            .collect();
        for seed in seeds {
            expanded.insert(seed.clone(), 1.0);
        }
        Self {
            seeds: seeds.to_vec(),
            expanded,
            bonus: bonus.max(0.0),
        }
    }

    pub fn with_bonus(mut self, bonus: f64) -> Self {
        self.bonus = bonus.max(0.0);
        self
    }

    pub fn seeds(&self) -> &[String] {
        &self.seeds
    }

    pub fn expanded(&self) -> &BTreeMap<String, f64> {
        &self.expanded
    }

    /// Log-space bonus multiplier λ.
    pub fn bonus(&self) -> f64 {
        self.bonus
    }

    pub fn weight(&self, word: &str) -> Option<f64> {
        self.expanded.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.expanded.contains_key(word)
    }

    pub fn is_empty(&self) -> bool {
        self.expanded.is_empty()
    }

    /// Additive log-space bonus for `word`: `λ · weight`.
    pub fn log_bonus(&self, word: &str) -> f64 {
        self.weight(word).map_or(0.0, |w| self.bonus * w)
    }
}

/// Expands seed keywords with the `k` words that share the most corpus lines
/// with any seed. Ties go to the lexicographically smaller word. Seeds
/// themselves are normalized through the tokenizer; non-word seeds vanish.
pub fn expand_topic(index: &CooccurrenceIndex, seeds: &[&str], k: usize) -> TopicSet {
    let mut normalized = Vec::new();
    for seed in seeds {
        for token in tokenize(seed).into_iter().filter(Token::is_word) {
            let word = token.into_surface();
            if !normalized.contains(&word) {
                normalized.push(word);
            }
        }
    }
    if normalized.is_empty() {
        return TopicSet::none();
    }
    let seed_set: BTreeSet<String> = normalized.iter().cloned().collect();
    let mut ranked: Vec<(String, u64)> = index.cooccurrence_counts(&seed_set).into_iter().collect();
    ranked.sort_by(|(wa, ca), (wb, cb)| cb.cmp(ca).then_with(|| wa.cmp(wb)));
    ranked.truncate(k);
    let max = ranked.first().map_or(1, |(_, c)| *c) as f64;
    TopicSet::from_weights(
        &normalized,
        ranked.into_iter().map(|(w, c)| (w, c as f64 / max)),
        DEFAULT_TOPIC_BONUS,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> CooccurrenceIndex {
        CooccurrenceIndex::from_lines(&[
            "the ship will sail",
            "a ship needs a sail",
            "sail the ship home",
            "the crew of the ship",
            "the cat sleeps",
            "pirate gold",
        ])
    }

    #[test]
    fn no_seeds_disables_priming() {
        for k in [0, 3, 100] {
            let topic = expand_topic(&fixture(), &[], k);
            assert!(topic.is_empty());
            assert!(topic.seeds().is_empty());
        }
    }

    #[test]
    fn most_frequent_companion_is_included() {
        // brute force over the fixture lines
        let lines = fixture();
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for line in lines.lines() {
            if line.iter().any(|w| w == "ship") {
                for w in line.iter().filter(|w| *w != "ship") {
                    *counts.entry(w.as_str()).or_default() += 1;
                }
            }
        }
        assert_eq!(counts["sail"], 3);
        assert_eq!(counts["the"], 3);
        assert_eq!(counts["crew"], 1);

        let topic = expand_topic(&lines, &["ship"], 2);
        assert_eq!(topic.weight("ship"), Some(1.0));
        assert_eq!(topic.weight("sail"), Some(1.0));
        assert_eq!(topic.weight("the"), Some(1.0));
        assert!(!topic.contains("a"));

        let wider = expand_topic(&lines, &["ship"], 10);
        assert_eq!(wider.weight("crew"), Some(1.0 / 3.0));
        assert!(!wider.contains("cat"));
    }

    #[test]
    fn seeds_are_kept_even_when_absent() {
        let topic = expand_topic(&fixture(), &["Kraken"], 5);
        assert_eq!(topic.seeds(), ["kraken"]);
        assert_eq!(topic.expanded().len(), 1);
        assert_eq!(topic.weight("kraken"), Some(1.0));
    }

    #[test]
    fn multiple_seeds_union_lines() {
        let topic = expand_topic(&fixture(), &["ship", "pirate"], 20);
        assert_eq!(topic.weight("pirate"), Some(1.0));
        assert!(topic.contains("gold"));
        for w in topic.expanded().values() {
            assert!(*w > 0.0 && *w <= 1.0);
        }
    }

    #[test]
    fn zero_k_keeps_seeds_only() {
        let topic = expand_topic(&fixture(), &["ship"], 0);
        assert_eq!(topic.expanded().keys().collect::<Vec<_>>(), ["ship"]);
    }
}
