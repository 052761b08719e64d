use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::features::{features, Feature};
use super::resources::Resources;
use super::stats::{summarize, CiConfig, Summary};
use super::AnalyticsError;
use crate::source::Source;

/// Parses `SOURCE<TAB>text` records. Blank lines and `#` comment lines are
/// skipped.
pub fn parse_tagged(text: &str) -> Result<Vec<(Source, String)>, AnalyticsError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let (tag, body) = raw.split_once('\t').ok_or_else(|| AnalyticsError::Malformed {
            line,
            msg: "expected SOURCE<TAB>text".into(),
        })?;
        let source = tag.trim().parse::<Source>().map_err(|_| AnalyticsError::UnknownSource {
            line,
            tag: tag.trim().to_string(),
        })?;
        out.push((source, body.to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub source: Source,
    pub n: usize,
    pub features: BTreeMap<Feature, Summary>,
}

/// Per-source feature means with confidence intervals, in source order.
/// Sources without lines are left out.
pub fn group_stats(lines: &[(Source, String)], resources: &Resources, config: &CiConfig) -> Vec<GroupStats> {
    Source::ALL
        .iter()
        .filter_map(|&source| {
            let vectors: Vec<_> = lines
                .iter()
                .filter(|(s, _)| *s == source)
                .map(|(_, text)| features(text, resources))
                .collect();
            if vectors.is_empty() {
                return None;
            }
            let features = Feature::ALL
                .iter()
                .map(|&f| {
                    let values: Vec<f64> = vectors.iter().map(|v| v.get(f)).collect();
                    (f, summarize(&values, config).expect("group is non-empty"))
                })
                .collect();
            Some(GroupStats {
                source,
                n: vectors.len(),
                features,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overlap {
    pub a: Source,
    pub b: Source,
    pub overlap: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureComparison {
    /// Sources from lowest to highest mean.
    pub ordering: Vec<Source>,
    pub overlaps: Vec<Overlap>,
}

/// A directional finding about human and machine lines, checked against
/// group means. `holds` is `None` when a needed source is missing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub statement: String,
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub sources: BTreeMap<Source, GroupStats>,
    pub comparisons: BTreeMap<Feature, FeatureComparison>,
    pub claims: Vec<Claim>,
}

impl ComparisonReport {
    pub fn claim(&self, id: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.id == id)
    }

    pub fn ordering(&self, feature: Feature) -> Option<&[Source]> {
        self.comparisons.get(&feature).map(|c| c.ordering.as_slice())
    }
}

enum Direction {
    Lower,
    Higher,
}

/// Id, statement, feature, subject, direction, sources compared against.
type ClaimSpec = (&'static str, &'static str, Feature, Source, Direction, &'static [Source]);

const CLAIMS: [ClaimSpec; 6] = [
    (
        "puppet_master_shorter",
        "Puppet Master lines are shorter than script and AI lines",
        Feature::WordsPerSentence,
        Source::PuppetMaster,
        Direction::Lower,
        &[Source::Script, Source::Ai],
    ),
    (
        "puppet_master_more_errors",
        "Puppet Master lines have more grammar or spelling mistakes than script and AI lines",
        Feature::ErrorCount,
        Source::PuppetMaster,
        Direction::Higher,
        &[Source::Script, Source::Ai],
    ),
    (
        "puppet_master_more_positive",
        "Puppet Master lines are more positive than script and AI lines",
        Feature::Sentiment,
        Source::PuppetMaster,
        Direction::Higher,
        &[Source::Script, Source::Ai],
    ),
    (
        "human_more_positive",
        "human lines are more positive than script and AI lines",
        Feature::Sentiment,
        Source::Human,
        Direction::Higher,
        &[Source::Script, Source::Ai],
    ),
    (
        "human_fewer_difficult_words",
        "human lines have fewer difficult words than script lines",
        Feature::DifficultRatio,
        Source::Human,
        Direction::Lower,
        &[Source::Script],
    ),
    (
        "human_more_errors_than_ai",
        "human lines have more grammar or spelling mistakes than AI lines",
        Feature::ErrorCount,
        Source::Human,
        Direction::Higher,
        &[Source::Ai],
    ),
];

/// Orders sources per feature, checks pairwise interval overlap and
/// evaluates the directional claims. With fewer than two sources only the
/// table is filled in.
pub fn compare_report(stats: &[GroupStats]) -> ComparisonReport {
    let sources: BTreeMap<Source, GroupStats> = stats.iter().map(|g| (g.source, g.clone())).collect();
    let mean = |s: Source, f: Feature| sources.get(&s).map(|g| g.features[&f].mean);

    let mut comparisons = BTreeMap::new();
    if sources.len() >= 2 {
        for f in Feature::ALL {
            let mut ordering: Vec<Source> = sources.keys().copied().collect();
            ordering.sort_by(|a, b| {
                let (ma, mb) = (mean(*a, f).unwrap(), mean(*b, f).unwrap());
                ma.total_cmp(&mb).then(a.cmp(b))
            });
            let keys: Vec<Source> = sources.keys().copied().collect();
            let mut overlaps = Vec::new();
            for (i, &a) in keys.iter().enumerate() {
                for &b in &keys[i + 1..] {
                    overlaps.push(Overlap {
                        a,
                        b,
                        overlap: sources[&a].features[&f].overlaps(&sources[&b].features[&f]),
                    });
                }
            }
            comparisons.insert(f, FeatureComparison { ordering, overlaps });
        }
    }

    let claims = CLAIMS
        .iter()
        .map(|(id, statement, f, subject, direction, others)| {
            let holds = mean(*subject, *f).and_then(|m| {
                let rest: Option<Vec<f64>> = others.iter().map(|o| mean(*o, *f)).collect();
                rest.map(|rest| {
                    rest.iter().all(|&r| match direction {
                        Direction::Lower => m < r,
                        Direction::Higher => m > r,
                    })
                })
            });
            Claim {
                id: id.to_string(),
                statement: statement.to_string(),
                holds,
            }
        })
        .collect();

    ComparisonReport {
        sources,
        comparisons,
        claims,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_parsing() {
        let lines = parse_tagged("# demo\nAI\thello there.\n\nHUMAN\tno way!\n").unwrap();
        assert_eq!(lines, vec![(Source::Ai, "hello there.".into()), (Source::Human, "no way!".into())]);
        assert!(matches!(
            parse_tagged("AI\tok\nROBOT\thi\n"),
            Err(AnalyticsError::UnknownSource { line: 2, .. })
        ));
        assert!(matches!(parse_tagged("AI hi\n"), Err(AnalyticsError::Malformed { line: 1, .. })));
    }

    #[test]
    fn single_source_has_no_comparisons() {
        let lines = vec![(Source::Script, "To be or not to be.".to_string())];
        let report = compare_report(&group_stats(&lines, Resources::bundled(), &CiConfig::default()));
        assert_eq!(report.sources.len(), 1);
        assert!(report.comparisons.is_empty());
        assert!(report.claims.iter().all(|c| c.holds.is_none()));
        let g = &report.sources[&Source::Script];
        assert_eq!(g.features[&Feature::WordsPerSentence].ci_low, 6.0);
    }

    #[test]
    fn report_is_keyed_by_source_then_feature() {
        let lines = vec![
            (Source::Ai, "a b.".to_string()),
            (Source::Human, "a.".to_string()),
        ];
        let report = compare_report(&group_stats(&lines, Resources::bundled(), &CiConfig::default()));
        let json = serde_json::to_value(&report).unwrap();
        assert!(json["sources"]["AI"]["features"]["words_per_sentence"]["mean"].is_number());
        assert_eq!(json["comparisons"]["words_per_sentence"]["ordering"][0], "HUMAN");
    }
}
