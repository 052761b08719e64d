use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Where a line of dialogue came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    PuppetMaster,
    Ai,
    Script,
    Human,
}

impl Source {
    pub const ALL: [Source; 4] = [Source::PuppetMaster, Source::Ai, Source::Script, Source::Human];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::PuppetMaster => "PUPPET_MASTER",
            Source::Ai => "AI",
            Source::Script => "SCRIPT",
            Source::Human => "HUMAN",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown source tag `{0}`")]
pub struct UnknownSource(pub String);

impl FromStr for Source {
    type Err = UnknownSource;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Source::ALL
            .into_iter()
            .find(|src| src.as_str() == s)
            .ok_or_else(|| UnknownSource(s.to_string()))
    }
}
