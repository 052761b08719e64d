use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::NGramModel;
use super::token::{Token, TokenKind, BOUNDARY};
use super::topic::TopicSet;

pub const DEFAULT_MAX_LEN: usize = 25;

/// Next-token distribution after topic priming: each expanded topic word has
/// its probability multiplied by `exp(λ · weight)` before renormalizing.
pub fn primed_distribution<'m>(
    model: &'m NGramModel,
    history: &[String],
    topic: &TopicSet,
) -> Vec<(&'m str, f64)> {
    let mut dist: Vec<(&str, f64)> = model
        .distribution(history)
        .into_iter()
        .map(|(w, p)| (w, p * topic.log_bonus(w).exp()))
        .collect();
    let total: f64 = dist.iter().map(|(_, p)| p).sum();
    if total > 0.0 {
        for (_, p) in &mut dist {
            *p /= total;
        }
    }
    dist
}

/// Samples one sentence word by word. The history starts from the tail of
/// `context`; sampling stops at the boundary marker or after `max_len`
/// tokens. Identical arguments always produce the same sentence.
pub fn generate(
    model: &NGramModel,
    context: &[Token],
    topic: &TopicSet,
    seed: u64,
    max_len: usize,
) -> Vec<Token> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history = model.history_from_context(context);
    let mut out = Vec::new();
    while out.len() < max_len {
        let dist = primed_distribution(model, &history, topic);
        let next = sample(&dist, rng.gen::<f64>());
        if next == BOUNDARY {
            break;
        }
        // vocabulary surfaces always classify
        let token = Token::from_surface(next).expect("vocabulary token");
        debug_assert_ne!(token.kind(), TokenKind::Boundary);
        history.remove(0);
        history.push(next.to_string());
        out.push(token);
    }
    out
}

/// Inverse-CDF draw; `u` is uniform in `[0, 1)`.
fn sample<'a>(dist: &[(&'a str, f64)], u: f64) -> &'a str {
    let mut acc = 0.0;
    for (word, p) in dist {
        acc += p;
        if u < acc {
            return word;
        }
    }
    // rounding left `acc` a hair under 1
    dist.iter()
        .rev()
        .find(|(_, p)| *p > 0.0)
        .map(|(w, _)| *w)
        .unwrap_or(BOUNDARY)
}
