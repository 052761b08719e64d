use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::CurationError;

/// Operator-supplied words whose presence removes a candidate.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Blocklist {
    words: BTreeSet<String>,
}

impl Blocklist {
    pub fn empty() -> Self {
        Self::default()
    }

    /// One word per line; anything after `#` is a comment.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|line| line.split('#').next().unwrap_or("").trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        Self { words }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CurationError> {
        let path = path.as_ref();
        fs::read_to_string(path)
            .map(|text| Self::parse(&text))
            .map_err(|source| CurationError::Io {
                path: path.display().to_string(),
                source,
            })
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}
