//! Bundled data sets used by the demo, the tests and the acceptance suite.

/// Default blocklist for the candidate filter.
pub const BLOCKLIST: &str = include_str!("../data/blocklist.txt");

/// Rosters and ballots of six shows; in two of them a Free-will Human is
/// majority-guessed as a Cyborg.
pub const SIX_SHOWS: &str = include_str!("../data/fixtures/six_shows.json");

/// Tagged lines built so the Puppet Master, script, AI and human groups
/// differ in known directions.
pub const DIRECTIONAL_LINES: &str = include_str!("../data/fixtures/directional.tsv");

/// Mixed-source tagged lines for the `analyze` demo.
pub const DEMO_LINES: &str = include_str!("../data/fixtures/demo_lines.tsv");

/// Synthetic questionnaire answers for seven cohorts.
pub const DEMO_SURVEY: &str = include_str!("../data/fixtures/demo_survey.tsv");

/// Ten lines with word lists small enough to score by hand, plus the
/// expected feature values.
pub mod hand_scored {
    pub const LINES: &str = include_str!("../data/fixtures/hand_scored/lines.txt");
    pub const DICTIONARY: &str = include_str!("../data/fixtures/hand_scored/dictionary.txt");
    pub const EASY_WORDS: &str = include_str!("../data/fixtures/hand_scored/easy_words.txt");
    pub const LEXICON: &str = include_str!("../data/fixtures/hand_scored/sentiment_lexicon.tsv");
    pub const EXPECTED: &str = include_str!("../data/fixtures/hand_scored/expected.json");

    /// The fixture's resources.
    pub fn resources() -> crate::analytics::Resources {
        use crate::analytics::Resources;
        Resources {
            easy_words: Resources::parse_words(EASY_WORDS),
            dictionary: Resources::parse_words(DICTIONARY),
            lexicon: Resources::parse_lexicon(LEXICON).expect("fixture lexicon parses"),
        }
    }

    /// The ten fixture lines, including the leading empty one.
    pub fn lines() -> Vec<&'static str> {
        LINES.lines().collect()
    }
}
