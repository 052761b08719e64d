//! Lexical features of lines, grouped means with confidence intervals, and
//! audience survey aggregation.

mod features;
mod report;
mod resources;
mod stats;
mod survey;
mod words;

use std::path::PathBuf;

pub use features::{features, sentiment, Feature, FeatureVector, NEGATORS, SENTIMENT_ALPHA};
pub use report::{compare_report, group_stats, parse_tagged, Claim, ComparisonReport, FeatureComparison, GroupStats, Overlap};
pub use resources::Resources;
pub use stats::{summarize, CiConfig, CiMethod, Spread, Summary};
pub use survey::{parse_survey, survey_aggregate, GroupSurvey, SurveyResponse, SurveyScale, QUESTIONS};
pub use words::{syllables, words, Sentence, Word};

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("line {line}: unknown source `{tag}`")]
    UnknownSource { line: usize, tag: String },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: answer {value} outside scale {min}..={max}")]
    OutOfScale { line: usize, value: i64, min: u8, max: u8 },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
