//! Server settings, loadable from a TOML file. Every field has a default.

use std::path::{Path, PathBuf};

use earpiece_core::curation::CurationConfig;
use earpiece_core::show::ShowConfig;
use earpiece_core::textgen::{DEFAULT_TOPIC_BONUS, DEFAULT_TOPIC_SIZE};
use serde::{Deserialize, Serialize};

use crate::GatewayError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub host: String,
    pub port: u16,
    /// Seed for candidate sampling.
    pub seed: u64,
    /// Deadline for answering a CONTEXT_SUBMIT.
    pub context_timeout_ms: u64,
    /// Related words added to the suggestion's own words.
    pub topic_size: usize,
    /// Log-space bonus for topic words during generation.
    pub topic_bonus: f64,
    /// Directory for per-session event logs; in-memory when unset.
    pub log_dir: Option<PathBuf>,
    /// Flush each log record to disk before acknowledging.
    pub fsync: bool,
    pub show: ShowConfig,
    pub curation: CurationConfig,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            seed: 0,
            context_timeout_ms: 5_000,
            topic_size: DEFAULT_TOPIC_SIZE,
            topic_bonus: DEFAULT_TOPIC_BONUS,
            log_dir: None,
            fsync: true,
            show: ShowConfig::default(),
            curation: CurationConfig::default(),
        }
    }
}

impl GatewayConfig {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path).map_err(|e| GatewayError::Data(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| GatewayError::Data(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, GatewayError> {
        let config: Self = toml::from_str(text).map_err(|e| GatewayError::Data(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        self.curation
            .validate()
            .map_err(|e| GatewayError::Data(e.to_string()))?;
        if self.context_timeout_ms == 0 {
            return Err(GatewayError::Data("context_timeout_ms must be positive".into()));
        }
        if self.show.scale_min >= self.show.scale_max {
            return Err(GatewayError::Data("show.scale_min must be below show.scale_max".into()));
        }
        if !self.topic_bonus.is_finite() || self.topic_bonus < 0.0 {
            return Err(GatewayError::Data("topic_bonus must be a non-negative number".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_files_fill_defaults() {
        let c = GatewayConfig::parse("port = 9000\n[curation]\nk_show = 3\n").unwrap();
        assert_eq!(c.port, 9000);
        assert_eq!(c.curation.k_show, 3);
        assert_eq!(c.curation.n_gen, 10);
        assert_eq!(c.context_timeout_ms, 5_000);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(GatewayConfig::parse("prot = 9000\n").is_err());
        assert!(GatewayConfig::parse("[curation]\nk_show = 0\n").is_err());
        assert!(GatewayConfig::parse("context_timeout_ms = 0\n").is_err());
    }
}
