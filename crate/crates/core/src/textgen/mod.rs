//! Tokenization, n-gram training, topic-primed sampling and log-likelihood
//! scoring.

mod backend;
mod generate;
mod model;
mod persist;
mod token;
mod topic;

use std::fs;
use std::path::Path;

pub use backend::LanguageBackend;
pub use generate::{generate, primed_distribution, DEFAULT_MAX_LEN};
pub use model::{CorpusInfo, NGramModel, DEFAULT_ALPHA, DEFAULT_ORDER};
pub use token::{detokenize, tokenize, Token, TokenKind, BOUNDARY, PUNCTUATION, TERMINAL};
pub use topic::{expand_topic, CooccurrenceIndex, TopicSet, DEFAULT_TOPIC_BONUS, DEFAULT_TOPIC_SIZE};

#[derive(Debug, thiserror::Error)]
pub enum TextgenError {
    #[error("corpus has no non-empty lines")]
    EmptyCorpus,
    #[error("n-gram order must be at least 2, got {0}")]
    InvalidOrder(usize),
    #[error("smoothing constant must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Reads a corpus file: UTF-8, one utterance per line, blank lines dropped.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<String>, TextgenError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| TextgenError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect())
}

/// Corpora shipped with the crate, each short enough for exhaustive checks.
pub mod corpora {
    pub const NAUTICAL: &str = include_str!("../../data/corpus/nautical.txt");
    pub const DIALOGUE: &str = include_str!("../../data/corpus/dialogue.txt");

    pub fn all() -> [(&'static str, &'static str); 2] {
        [("nautical", NAUTICAL), ("dialogue", DIALOGUE)]
    }

    pub fn lines(corpus: &str) -> Vec<&str> {
        corpus.lines().filter(|l| !l.trim().is_empty()).collect()
    }
}
