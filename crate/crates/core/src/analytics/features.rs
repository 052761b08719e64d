use std::fmt;

use serde::{Deserialize, Serialize};

use super::resources::Resources;
use super::words::{syllables, words, Word};

/// Normalization constant of the compound sentiment score.
pub const SENTIMENT_ALPHA: f64 = 15.0;

/// Words that flip the polarity of a lexicon word up to two words later.
pub const NEGATORS: [&str; 3] = ["not", "never", "no"];

const CLITICS: [&str; 7] = ["s", "t", "ll", "re", "ve", "d", "m"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    SyllablesPerWord,
    WordsPerSentence,
    DifficultRatio,
    Sentiment,
    ErrorCount,
}

impl Feature {
    pub const ALL: [Feature; 5] = [
        Feature::SyllablesPerWord,
        Feature::WordsPerSentence,
        Feature::DifficultRatio,
        Feature::Sentiment,
        Feature::ErrorCount,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::SyllablesPerWord => "syllables_per_word",
            Feature::WordsPerSentence => "words_per_sentence",
            Feature::DifficultRatio => "difficult_ratio",
            Feature::Sentiment => "sentiment",
            Feature::ErrorCount => "error_count",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub syllables_per_word: f64,
    pub words_per_sentence: f64,
    pub difficult_ratio: f64,
    pub sentiment: f64,
    pub error_count: u32,
}

impl FeatureVector {
    pub fn get(&self, feature: Feature) -> f64 {
        match feature {
            Feature::SyllablesPerWord => self.syllables_per_word,
            Feature::WordsPerSentence => self.words_per_sentence,
            Feature::DifficultRatio => self.difficult_ratio,
            Feature::Sentiment => self.sentiment,
            Feature::ErrorCount => self.error_count as f64,
        }
    }
}

fn is_negator(word: &str) -> bool {
    NEGATORS.contains(&word)
}

fn spelled_ok(word: &Word, dictionary: &std::collections::HashSet<String>) -> bool {
    if dictionary.contains(&word.text) {
        return true;
    }
    match word.split_clitic() {
        Some((base, clitic)) => CLITICS.contains(&clitic) && dictionary.contains(base),
        None => false,
    }
}

/// Lexicon sum with negation, before normalization.
fn raw_sentiment(words: &[Word], resources: &Resources) -> f64 {
    let mut sum = 0.0;
    for (i, word) in words.iter().enumerate() {
        if is_negator(&word.text) {
            continue;
        }
        let Some(&valence) = resources.lexicon.get(&word.text) else {
            continue;
        };
        let negations = words[i.saturating_sub(2)..i].iter().filter(|w| is_negator(&w.text)).count();
        sum += if negations % 2 == 1 { -valence } else { valence };
    }
    sum
}

/// Compound sentiment of a line in [-1, 1].
pub fn sentiment(line: &str, resources: &Resources) -> f64 {
    let s = raw_sentiment(&words(line).words, resources);
    (s / (s * s + SENTIMENT_ALPHA).sqrt()).clamp(-1.0, 1.0)
}

/// The five lexical features of one line. An empty line, or one without
/// words, maps to the zero vector.
pub fn features(line: &str, resources: &Resources) -> FeatureVector {
    let sentence = words(line);
    let ws = &sentence.words;
    if ws.is_empty() {
        return FeatureVector::default();
    }
    let n = ws.len() as f64;
    let counts: Vec<usize> = ws.iter().map(|w| syllables(&w.text)).collect();
    let difficult = ws
        .iter()
        .zip(&counts)
        .filter(|(w, &c)| c >= 3 && !resources.easy_words.contains(&w.text))
        .count();
    let misspelled = ws.iter().filter(|w| !spelled_ok(w, &resources.dictionary)).count();
    let s = raw_sentiment(ws, resources);
    FeatureVector {
        syllables_per_word: counts.iter().sum::<usize>() as f64 / n,
        words_per_sentence: n,
        difficult_ratio: difficult as f64 / n,
        sentiment: (s / (s * s + SENTIMENT_ALPHA).sqrt()).clamp(-1.0, 1.0),
        error_count: (misspelled + usize::from(sentence.unterminated)) as u32,
    }
}
