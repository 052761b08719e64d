use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use super::AnalyticsError;

const DICTIONARY: &str = include_str!("../../data/lexicon/dictionary.txt");
const EASY_WORDS: &str = include_str!("../../data/lexicon/easy_words.txt");
const SENTIMENT: &str = include_str!("../../data/lexicon/sentiment_lexicon.tsv");

/// Word lists the feature extractor consults. Everything is lowercase.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub easy_words: HashSet<String>,
    pub dictionary: HashSet<String>,
    pub lexicon: HashMap<String, f64>,
}

fn entries(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn read(path: &Path) -> Result<String, AnalyticsError> {
    std::fs::read_to_string(path).map_err(|source| AnalyticsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl Resources {
    /// The bundled dictionary, easy-word list and sentiment lexicon, parsed
    /// once per process.
    pub fn bundled() -> &'static Resources {
        static BUNDLED: OnceLock<Resources> = OnceLock::new();
        BUNDLED.get_or_init(|| Resources {
            easy_words: Self::parse_words(EASY_WORDS),
            dictionary: Self::parse_words(DICTIONARY),
            lexicon: Self::parse_lexicon(SENTIMENT).expect("bundled lexicon parses"),
        })
    }

    /// Loads `dictionary.txt`, `easy_words.txt` and `sentiment_lexicon.tsv`
    /// from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self, AnalyticsError> {
        Ok(Self {
            easy_words: Self::parse_words(&read(&dir.join("easy_words.txt"))?),
            dictionary: Self::parse_words(&read(&dir.join("dictionary.txt"))?),
            lexicon: Self::parse_lexicon(&read(&dir.join("sentiment_lexicon.tsv"))?)?,
        })
    }

    /// One word per line; `#` starts a comment line.
    pub fn parse_words(text: &str) -> HashSet<String> {
        entries(text).map(|(_, w)| w.to_lowercase()).collect()
    }

    /// `word<TAB>valence` per line.
    pub fn parse_lexicon(text: &str) -> Result<HashMap<String, f64>, AnalyticsError> {
        entries(text)
            .map(|(line, l)| {
                let malformed = |msg: &str| AnalyticsError::Malformed {
                    line,
                    msg: msg.to_string(),
                };
                let (word, value) = l.split_once('\t').ok_or_else(|| malformed("expected word<TAB>valence"))?;
                let value: f64 = value.trim().parse().map_err(|_| malformed("valence is not a number"))?;
                if !value.is_finite() {
                    return Err(malformed("valence is not finite"));
                }
                Ok((word.trim().to_lowercase(), value))
            })
            .collect()
    }

    pub fn with_words(easy_words: &[&str], dictionary: &[&str], lexicon: &[(&str, f64)]) -> Self {
        let set = |ws: &[&str]| ws.iter().map(|w| w.to_lowercase()).collect();
        Self {
            easy_words: set(easy_words),
            dictionary: set(dictionary),
            lexicon: lexicon.iter().map(|(w, v)| (w.to_lowercase(), *v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lists_load() {
        let r = Resources::bundled();
        assert!(r.dictionary.len() > 40_000);
        assert!(r.easy_words.len() > 2_500);
        assert!(r.dictionary.contains("desert"));
        assert!(r.easy_words.contains("able"));
        assert_eq!(r.lexicon.get("good"), Some(&1.9));
        assert!(!r.dictionary.iter().any(|w| w.starts_with('#')));
    }

    #[test]
    fn lexicon_errors_carry_lines() {
        let err = Resources::parse_lexicon("# header\ngood\t1.9\nbad 2\n").unwrap_err();
        assert!(matches!(err, AnalyticsError::Malformed { line: 3, .. }));
    }
}
