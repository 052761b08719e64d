use std::collections::{BTreeMap, BTreeSet};

use super::token::{tokenize, Token, TokenKind, BOUNDARY};
use super::topic::CooccurrenceIndex;
use super::TextgenError;

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_ALPHA: f64 = 0.1;

/// Name and size of the text a model was trained on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusInfo {
    pub name: String,
    pub lines: usize,
}

/// Word n-gram model with additive smoothing.
///
/// Every corpus line is padded with `order - 1` boundary markers in front and
/// one behind, so `P(w | h) = (c(h, w) + α) / (c(h) + α·|V|)` where `V` is
/// the vocabulary including the boundary marker. A trained model is never
/// mutated.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    pub(crate) order: usize,
    pub(crate) alpha: f64,
    pub(crate) vocab: Vec<String>,
    pub(crate) counts: BTreeMap<Vec<String>, BTreeMap<String, u64>>,
    pub(crate) totals: BTreeMap<Vec<String>, u64>,
    pub(crate) corpus: CorpusInfo,
    pub(crate) index: CooccurrenceIndex,
}

impl NGramModel {
    /// Trains on an in-memory corpus. Blank lines are ignored.
    pub fn train<S: AsRef<str>>(corpus: &[S], order: usize, alpha: f64) -> Result<Self, TextgenError> {
        Self::train_named("inline", corpus, order, alpha)
    }

    pub fn train_named<S: AsRef<str>>(
        name: &str,
        corpus: &[S],
        order: usize,
        alpha: f64,
    ) -> Result<Self, TextgenError> {
        if order < 2 {
            return Err(TextgenError::InvalidOrder(order));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(TextgenError::InvalidAlpha(alpha));
        }
        let lines: Vec<Vec<Token>> = corpus
            .iter()
            .map(|line| tokenize(line.as_ref()))
            .filter(|tokens| !tokens.is_empty())
            .collect();
        if lines.is_empty() {
            return Err(TextgenError::EmptyCorpus);
        }

        let mut vocab = BTreeSet::from([BOUNDARY.to_string()]);
        let mut counts: BTreeMap<Vec<String>, BTreeMap<String, u64>> = BTreeMap::new();
        for tokens in &lines {
            let padded = pad(order, tokens.iter().map(|t| t.surface().to_string()));
            for window in padded.windows(order) {
                let (history, next) = window.split_at(order - 1);
                *counts
                    .entry(history.to_vec())
                    .or_default()
                    .entry(next[0].clone())
                    .or_default() += 1;
            }
            vocab.extend(tokens.iter().map(|t| t.surface().to_string()));
        }

        Ok(Self::assemble(
            order,
            alpha,
            vocab.into_iter().collect(),
            counts,
            CorpusInfo {
                name: name.replace(['\n', '\r'], " "),
                lines: lines.len(),
            },
            CooccurrenceIndex::from_tokenized(&lines),
        ))
    }

    pub(crate) fn assemble(
        order: usize,
        alpha: f64,
        vocab: Vec<String>,
        counts: BTreeMap<Vec<String>, BTreeMap<String, u64>>,
        corpus: CorpusInfo,
        index: CooccurrenceIndex,
    ) -> Self {
        let totals = counts
            .iter()
            .map(|(history, next)| (history.clone(), next.values().sum()))
            .collect();
        Self {
            order,
            alpha,
            vocab,
            counts,
            totals,
            corpus,
            index,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Sorted vocabulary, boundary marker included.
    pub fn vocabulary(&self) -> &[String] {
        &self.vocab
    }

    pub fn corpus(&self) -> &CorpusInfo {
        &self.corpus
    }

    pub fn cooccurrence(&self) -> &CooccurrenceIndex {
        &self.index
    }

    /// Observed histories, each of length `order - 1`.
    pub fn histories(&self) -> impl Iterator<Item = &[String]> {
        self.counts.keys().map(Vec::as_slice)
    }

    /// Raw count of `next` after `history`.
    pub fn count(&self, history: &[String], next: &str) -> u64 {
        self.counts
            .get(history)
            .and_then(|row| row.get(next))
            .copied()
            .unwrap_or(0)
    }

    pub fn history_count(&self, history: &[String]) -> u64 {
        self.totals.get(history).copied().unwrap_or(0)
    }

    /// Total number of order-grams seen in training.
    pub fn token_events(&self) -> u64 {
        self.totals.values().sum()
    }

    /// Smoothed conditional probability. With `α = 0` an unseen history has
    /// no counts at all; it falls back to the uniform distribution.
    pub fn probability(&self, history: &[String], next: &str) -> f64 {
        let v = self.vocab.len() as f64;
        let denom = self.history_count(history) as f64 + self.alpha * v;
        if denom == 0.0 {
            return 1.0 / v;
        }
        (self.count(history, next) as f64 + self.alpha) / denom
    }

    /// Full conditional distribution over the vocabulary for one history.
    pub fn distribution(&self, history: &[String]) -> Vec<(&str, f64)> {
        // same arithmetic as `probability`, with the row looked up once
        let v = self.vocab.len() as f64;
        let denom = self.history_count(history) as f64 + self.alpha * v;
        let row = self.counts.get(history);
        self.vocab
            .iter()
            .map(|w| {
                let p = if denom == 0.0 {
                    1.0 / v
                } else {
                    let c = row.and_then(|r| r.get(w.as_str())).copied().unwrap_or(0);
                    (c as f64 + self.alpha) / denom
                };
                (w.as_str(), p)
            })
            .collect()
    }

    /// Log-likelihood of a complete line: every token plus the closing
    /// boundary event. An empty sentence scores the boundary event alone.
    pub fn score(&self, sentence: &[Token]) -> f64 {
        self.log_likelihood(sentence, true)
    }

    /// Log-likelihood of the tokens only, without the closing boundary.
    /// Strictly decreases as tokens are appended whenever `α > 0`.
    pub fn prefix_score(&self, sentence: &[Token]) -> f64 {
        self.log_likelihood(sentence, false)
    }

    pub fn score_text(&self, text: &str) -> f64 {
        self.score(&tokenize(text))
    }

    fn log_likelihood(&self, sentence: &[Token], close: bool) -> f64 {
        let words = sentence
            .iter()
            .filter(|t| t.kind() != TokenKind::Boundary)
            .map(|t| t.surface().to_string());
        let mut padded = pad(self.order, words);
        if !close {
            padded.pop();
        }
        padded
            .windows(self.order)
            .map(|window| {
                let (history, next) = window.split_at(self.order - 1);
                self.probability(history, &next[0]).ln()
            })
            .sum()
    }

    /// Initial sampling history: the last `order - 1` tokens of the
    /// boundary-padded context.
    pub fn history_from_context(&self, context: &[Token]) -> Vec<String> {
        let mut history: Vec<String> = std::iter::repeat_n(BOUNDARY.to_string(), self.order - 1)
            .chain(
                context
                    .iter()
                    .filter(|t| t.kind() != TokenKind::Boundary)
                    .map(|t| t.surface().to_string()),
            )
            .collect();
        history.drain(..history.len() - (self.order - 1));
        history
    }
}

fn pad(order: usize, words: impl Iterator<Item = String>) -> Vec<String> {
    let mut padded: Vec<String> = std::iter::repeat_n(BOUNDARY.to_string(), order - 1).collect();
    padded.extend(words);
    padded.push(BOUNDARY.to_string());
    padded
}
