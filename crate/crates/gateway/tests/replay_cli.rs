use std::collections::BTreeMap;
use std::process::Command;

use earpiece_core::analytics::{CiConfig, Resources};
use earpiece_core::show::Transcript;
use earpiece_gateway::demo::run_demo;
use earpiece_gateway::replay::{replay_transcript, ShowSummary};
use serde_json::Value;

const GOLDEN: &str = include_str!("../data/demo_transcript.json");

fn earpiece(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_earpiece")).args(args).output().unwrap()
}

#[test]
fn demo_matches_the_golden_transcript() {
    let run = run_demo().unwrap();
    assert_eq!(run.transcript.to_json(), GOLDEN);
}

#[test]
fn golden_manifest_matches_its_lines() {
    // counted straight from the JSON, not through the transcript types
    let doc: Value = serde_json::from_str(GOLDEN).unwrap();
    let mut counted: BTreeMap<String, u64> = BTreeMap::new();
    for scene in doc["scenes"].as_array().unwrap() {
        for u in scene["utterances"].as_array().unwrap() {
            *counted.entry(u["source"].as_str().unwrap().to_string()).or_default() += 1;
        }
    }
    let manifest: BTreeMap<String, u64> = doc["manifest"]["lines_by_source"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.as_u64().unwrap()))
        .filter(|(_, v)| *v > 0)
        .collect();
    assert_eq!(manifest, counted);
    assert!(counted.len() >= 2);
}

#[test]
fn replayed_summary_equals_the_live_one() {
    let run = run_demo().unwrap();
    let live = ShowSummary::from_session(run.rehearsal.host.show(), Resources::bundled(), &CiConfig::default());
    let (_, session) = replay_transcript(GOLDEN).unwrap();
    let replayed = ShowSummary::from_session(&session, Resources::bundled(), &CiConfig::default());
    assert_eq!(live, replayed);
    assert_eq!(run.rehearsal.host.show().latency_stats(), session.latency_stats());
    assert_eq!(Transcript::from_session(&session).unwrap().to_json(), GOLDEN);
}

#[test]
fn demo_latency_sits_in_the_observed_envelope() {
    let (_, session) = replay_transcript(GOLDEN).unwrap();
    let stats = session.latency_stats();
    let median = stats.median_s.unwrap();
    let max = stats.max_s.unwrap();
    assert!(median > 1.0, "median {median}");
    assert!(max <= 4.0, "max {max}");
    assert_eq!(session.scenes().len(), 2);
}

#[test]
fn cli_names_a_missing_corpus_and_exits_2() {
    let out = earpiece(&["serve", "--corpus", "/no/such/corpus.txt", "--port", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/corpus.txt"));
    let out = earpiece(&["train", "--corpus", "/no/such/corpus.txt", "--out", "/tmp/x.model"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cli_usage_errors_exit_1() {
    assert_eq!(earpiece(&["bogus"]).status.code(), Some(1));
    assert_eq!(earpiece(&["train", "--corpus"]).status.code(), Some(1));
    assert_eq!(earpiece(&["--help"]).status.code(), Some(0));
}

#[test]
fn cli_train_reports_three_lines() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("three.txt");
    std::fs::write(&corpus, "ahoy there.\n\nwhere is the ship?\nit sank!\n").unwrap();
    let model = dir.path().join("three.model");
    let out = earpiece(&["train", "--corpus", corpus.to_str().unwrap(), "--order", "2", "--alpha", "0.5", "--out", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let d: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(d["lines"], 3);
    assert_eq!(d["order"], 2);
    assert_eq!(d["tokens"], 3 + 5 + 3);
    assert!(model.exists());
}

#[test]
fn cli_replay_reports_parse_errors_by_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"session_id\": \"s\",\n  \"state\": 12\n}\n").unwrap();
    let out = earpiece(&["replay", "--transcript", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let good = dir.path().join("good.json");
    std::fs::write(&good, GOLDEN).unwrap();
    let out = earpiece(&["replay", "--transcript", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["slower_than_one_second"], true);
}

#[test]
fn cli_analyze_and_survey_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let lines = dir.path().join("lines.tsv");
    std::fs::write(&lines, earpiece_core::fixtures::DIRECTIONAL_LINES).unwrap();
    let report = dir.path().join("report.json");
    let out = earpiece(&["analyze", "--lines", lines.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["groups"].as_array().unwrap().len(), 4);

    let survey = dir.path().join("survey.tsv");
    std::fs::write(&survey, earpiece_core::fixtures::DEMO_SURVEY).unwrap();
    let out_path = dir.path().join("survey.json");
    let out = earpiece(&["survey", "--in", survey.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["EDM-AUD"]["n"], 29);

    std::fs::write(&survey, "TOR\t1,2,3,4,9\n").unwrap();
    let out = earpiece(&["survey", "--in", survey.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}
