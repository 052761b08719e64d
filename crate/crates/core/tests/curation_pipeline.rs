use std::sync::atomic::{AtomicUsize, Ordering};

use earpiece_core::curation::{propose, Blocklist, CurationConfig, Decision, Outcome, ProposeRequest};
use earpiece_core::fixtures;
use earpiece_core::textgen::{corpora, detokenize, tokenize, LanguageBackend, NGramModel, Token, TopicSet};

/// Replays a fixed list of lines, one per generate call, with fixed scores.
struct Scripted {
    lines: Vec<(&'static str, f64)>,
    next: AtomicUsize,
}

impl LanguageBackend for Scripted {
    fn generate(&self, _: &[Token], _: &TopicSet, _: u64, _: usize) -> Vec<Token> {
        let i = self.next.fetch_add(1, Ordering::SeqCst);
        tokenize(self.lines[i % self.lines.len()].0)
    }

    fn score(&self, sentence: &[Token]) -> f64 {
        let text = detokenize(sentence);
        self.lines.iter().find(|(l, _)| *l == text).map(|(_, s)| *s).unwrap()
    }

    fn prime(&self, _: &[&str], _: usize) -> TopicSet {
        TopicSet::none()
    }
}

const FIXTURE: [(&str, f64); 10] = [
    ("the ship is sinking", -4.0),
    ("darn this ship", -1.0),
    ("we need a bigger boat", -6.5),
    ("the ship is sinking", -4.0),
    ("what the heck", -2.0),
    ("hoist the sails", -3.0),
    ("crap the parrot", -0.5),
    ("hoist the sails", -3.0),
    ("land ho", -5.0),
    ("follow the stars", -7.0),
];

#[test]
fn three_blocked_two_duplicates() {
    let backend = Scripted {
        lines: FIXTURE.to_vec(),
        next: AtomicUsize::new(0),
    };
    let blocklist = Blocklist::parse(fixtures::BLOCKLIST);
    let topic = TopicSet::none();
    let set = propose(
        &backend,
        &blocklist,
        &CurationConfig::default(),
        &ProposeRequest {
            id: 1,
            context: "the ship",
            topic: &topic,
            seed: 0,
            created_at: 0,
        },
    )
    .unwrap();
    assert_eq!(set.generated.len(), 10);
    assert_eq!(set.generated.iter().filter(|c| c.flags.offensive).count(), 3);
    assert_eq!(set.generated.iter().filter(|c| c.flags.duplicate).count(), 2);

    // oracle: drop blocked lines and repeats, sort the rest by score
    let blocked = ["darn", "heck", "crap"];
    let mut kept: Vec<(&str, f64)> = Vec::new();
    for (line, score) in FIXTURE {
        if line.split(' ').any(|w| blocked.contains(&w)) || kept.iter().any(|(l, _)| *l == line) {
            continue;
        }
        kept.push((line, score));
    }
    assert_eq!(kept.len(), 5);
    kept.sort_by(|a, b| b.1.total_cmp(&a.1));
    let expected: Vec<&str> = kept.iter().take(4).map(|(l, _)| *l).collect();
    let presented: Vec<String> = set.presented_candidates().map(|c| c.text.clone()).collect();
    assert_eq!(presented, expected);
}

#[test]
fn defaults_on_the_bundled_corpus() {
    let model = NGramModel::train(&corpora::lines(corpora::NAUTICAL), 3, 0.1).unwrap();
    let topic = model.prime(&["ship"], 10);
    let blocklist = Blocklist::parse(fixtures::BLOCKLIST);
    let run = |seed| {
        propose(
            &model,
            &blocklist,
            &CurationConfig::default(),
            &ProposeRequest {
                id: seed,
                context: "where is the ship ?",
                topic: &topic,
                seed,
                created_at: 100,
            },
        )
        .unwrap()
    };
    for seed in 0..20 {
        let set = run(seed);
        assert_eq!(set.generated.len(), 10);
        assert!(set.presented.len() <= 4);
        let scores: Vec<f64> = set.presented_candidates().map(|c| c.score).collect();
        assert!(scores.windows(2).all(|w| w[0] >= w[1]));
        for c in set.presented_candidates() {
            assert!((c.score - model.score(c.tokens())).abs() < 1e-12);
        }
        assert_eq!(set, run(seed));
    }
}

#[test]
fn selections_become_ai_lines_in_order() {
    let model = NGramModel::train(&corpora::lines(corpora::DIALOGUE), 2, 0.5).unwrap();
    let topic = TopicSet::none();
    let mut set = propose(
        &model,
        &Blocklist::empty(),
        &CurationConfig::default(),
        &ProposeRequest {
            id: 3,
            context: "",
            topic: &topic,
            seed: 9,
            created_at: 42,
        },
    )
    .unwrap();
    assert!(set.presented.len() >= 3, "need three distinct lines");
    let texts: Vec<String> = set.presented_candidates().map(|c| c.text.clone()).collect();
    let drafts = set.resolve(&Decision::Select { positions: vec![1, 3] }).unwrap();
    assert_eq!(drafts.iter().map(|d| d.text.as_str()).collect::<Vec<_>>(), [&texts[0], &texts[2]]);
    assert!(drafts.iter().all(|d| d.created_at == 42));
    assert_eq!(set.outcome, Outcome::Selected { positions: vec![1, 3] });
    assert!(set.resolve(&Decision::Discard).is_err());
}
