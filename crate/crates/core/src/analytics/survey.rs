use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::{summarize, CiConfig, Summary};
use super::AnalyticsError;

/// Number of questionnaire items per response.
pub const QUESTIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyScale {
    pub min: u8,
    pub max: u8,
}

impl Default for SurveyScale {
    fn default() -> Self {
        Self { min: 1, max: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub group: String,
    pub answers: [u8; QUESTIONS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSurvey {
    pub n: usize,
    pub questions: Vec<Summary>,
}

/// Parses `GROUP<TAB>q1,q2,q3,q4,q5` records. Blank lines and `#` comment
/// lines are skipped.
pub fn parse_survey(text: &str, scale: SurveyScale) -> Result<Vec<SurveyResponse>, AnalyticsError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let malformed = |msg: String| AnalyticsError::Malformed { line, msg };
        let (group, answers) = trimmed
            .split_once('\t')
            .ok_or_else(|| malformed("expected GROUP<TAB>answers".into()))?;
        let group = group.trim();
        if group.is_empty() {
            return Err(malformed("empty group".into()));
        }
        let parsed: Vec<i64> = answers
            .split(',')
            .map(|a| a.trim().parse::<i64>().map_err(|_| malformed(format!("`{}` is not an integer", a.trim()))))
            .collect::<Result<_, _>>()?;
        if parsed.len() != QUESTIONS {
            return Err(malformed(format!("expected {QUESTIONS} answers, got {}", parsed.len())));
        }
        let mut answers = [0u8; QUESTIONS];
        for (slot, &value) in answers.iter_mut().zip(&parsed) {
            if value < scale.min as i64 || value > scale.max as i64 {
                return Err(AnalyticsError::OutOfScale {
                    line,
                    value,
                    min: scale.min,
                    max: scale.max,
                });
            }
            *slot = value as u8;
        }
        out.push(SurveyResponse {
            group: group.to_string(),
            answers,
        });
    }
    Ok(out)
}

/// Per group and question: mean with confidence interval.
pub fn survey_aggregate(responses: &[SurveyResponse], config: &CiConfig) -> BTreeMap<String, GroupSurvey> {
    let mut groups: BTreeMap<String, Vec<&SurveyResponse>> = BTreeMap::new();
    for r in responses {
        groups.entry(r.group.clone()).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(group, rs)| {
            let questions = (0..QUESTIONS)
                .map(|q| {
                    let values: Vec<f64> = rs.iter().map(|r| r.answers[q] as f64).collect();
                    summarize(&values, config).expect("group is non-empty")
                })
                .collect();
            (group, GroupSurvey { n: rs.len(), questions })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fours() {
        let rs = parse_survey("TOR\t4,4,4,4,4\n", SurveyScale::default()).unwrap();
        let agg = survey_aggregate(&rs, &CiConfig::default());
        for q in &agg["TOR"].questions {
            assert_eq!((q.ci_low, q.mean, q.ci_high), (4.0, 4.0, 4.0));
        }
    }

    #[test]
    fn rejects_bad_records() {
        let scale = SurveyScale::default();
        assert!(matches!(
            parse_survey("# h\nLON\t1,2,3,4,8\n", scale),
            Err(AnalyticsError::OutOfScale { line: 2, value: 8, .. })
        ));
        assert!(matches!(
            parse_survey("LON\t1,2,3,4\n", scale),
            Err(AnalyticsError::Malformed { line: 1, .. })
        ));
        assert!(matches!(parse_survey("LON 1,2,3,4,5\n", scale), Err(AnalyticsError::Malformed { .. })));
        assert!(matches!(parse_survey("LON\t1,x,3,4,5\n", scale), Err(AnalyticsError::Malformed { .. })));
        assert!(parse_survey("LON\t1,2,3,4,9\n", SurveyScale { min: 1, max: 9 }).is_ok());
    }
}
