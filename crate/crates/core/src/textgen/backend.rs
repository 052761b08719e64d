use super::generate::generate;
use super::model::NGramModel;
use super::token::Token;
use super::topic::{expand_topic, TopicSet};

/// Anything that can sample candidate lines, score them and build a topic
/// from seed words. Implementations must be immutable after construction so
/// one instance can serve many sessions at once.
pub trait LanguageBackend: Send + Sync {
    fn generate(&self, context: &[Token], topic: &TopicSet, seed: u64, max_len: usize) -> Vec<Token>;

    /// Natural-log likelihood of a complete line.
    fn score(&self, sentence: &[Token]) -> f64;

    fn prime(&self, seeds: &[&str], k: usize) -> TopicSet;
}

impl LanguageBackend for NGramModel {
    fn generate(&self, context: &[Token], topic: &TopicSet, seed: u64, max_len: usize) -> Vec<Token> {
        generate(self, context, topic, seed, max_len)
    }

    fn score(&self, sentence: &[Token]) -> f64 {
        NGramModel::score(self, sentence)
    }

    fn prime(&self, seeds: &[&str], k: usize) -> TopicSet {
        expand_topic(self.cooccurrence(), seeds, k)
    }
}
