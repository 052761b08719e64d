use std::collections::BTreeMap;

use earpiece_core::show::{
    misidentification_rate, tally, Ballot, LatencyStats, LineDraft, RoleKind, ShowBallots, ShowConfig, ShowError,
    ShowSession,
};
use earpiece_core::Source;
use proptest::prelude::*;

fn six_shows() -> Vec<ShowBallots> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/fixtures/six_shows.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Counts majority outcomes directly from the raw ballots.
fn oracle_fooled(show: &ShowBallots) -> bool {
    show.roster.iter().filter(|r| r.kind == RoleKind::FreeWill).any(|r| {
        let mut counts: BTreeMap<RoleKind, usize> = BTreeMap::new();
        for b in &show.ballots {
            if let Some(g) = b.get(&r.performer_id) {
                *counts.entry(*g).or_default() += 1;
            }
        }
        let cyborg = counts.get(&RoleKind::Cyborg).copied().unwrap_or(0);
        counts.iter().all(|(k, &c)| *k == RoleKind::Cyborg || c < cyborg)
    })
}

#[test]
fn six_show_fixture_gives_two_in_six() {
    let shows = six_shows();
    assert_eq!(shows.len(), 6);
    let tallies: Vec<_> = shows.iter().map(ShowBallots::tally).collect();
    let rate = misidentification_rate(&tallies).unwrap();
    assert!((rate - 2.0 / 6.0).abs() < 1e-12);
    let oracle = shows.iter().filter(|s| oracle_fooled(s)).count();
    assert_eq!(oracle, 2);
    for (show, t) in shows.iter().zip(&tallies) {
        assert_eq!(t.free_will_taken_for_cyborg(), oracle_fooled(show), "{}", show.name);
        for p in t.performers.values() {
            assert_eq!(p.counts.values().sum::<usize>(), p.ballots);
        }
        for acc in t.accuracy.values().flatten() {
            assert!((0.0..=1.0).contains(acc));
        }
    }
}

#[test]
fn duplicate_ballots_are_rejected() {
    let show = &six_shows()[0];
    let mut s = ShowSession::new("v", ShowConfig::default());
    for role in &show.roster {
        s.assign_role(role.performer_id.clone(), role.kind, role.secret, 0).unwrap();
    }
    s.go_live(0).unwrap();
    s.open_voting(1).unwrap();
    s.submit_vote("seat-1", show.ballots[0].clone(), 2).unwrap();
    assert_eq!(
        s.submit_vote("seat-1", show.ballots[1].clone(), 3),
        Err(ShowError::DuplicateBallot("seat-1".into()))
    );
    assert_eq!(s.tally().ballots, 1);
}

#[test]
fn latency_fixture() {
    let stats = LatencyStats::from_seconds(&[1.8, 2.2, 2.5, 4.0]);
    assert!((stats.median_s.unwrap() - 2.35).abs() < 1e-12);
    assert_eq!(stats.max_s, Some(4.0));
}

#[test]
fn latency_is_context_to_device() {
    let mut s = ShowSession::new("l", ShowConfig::default());
    s.assign_role("cy", RoleKind::Cyborg, true, 0).unwrap();
    s.assign_role("fw", RoleKind::FreeWill, true, 0).unwrap();
    s.assign_role("ceo", RoleKind::CeoController, false, 0).unwrap();
    s.go_live(0).unwrap();
    s.start_scene("kitchen", 0).unwrap();
    for (created, delivered) in [(1_000, 2_800), (5_000, 7_200), (9_000, 11_500), (20_000, 24_000)] {
        let draft = LineDraft {
            text: "x".into(),
            source: Source::Ai,
            created_at: created,
        };
        s.enqueue_line("cy", draft, false, created + 300).unwrap();
        s.next_line("cy", delivered).unwrap();
        // a late spoken report does not change the response time
        let id = s.utterances().last().unwrap().id;
        s.acknowledge_spoken("cy", id, delivered + 100).unwrap();
    }
    let stats = s.latency_stats();
    assert!((stats.median_s.unwrap() - 2.35).abs() < 1e-12);
    assert_eq!(stats.max_s, Some(4.0));
}

fn ballot_strategy() -> impl Strategy<Value = Ballot> {
    let kind = prop::sample::select(RoleKind::ON_STAGE.to_vec());
    prop::collection::btree_map(prop::sample::select(vec!["ana", "ben", "cleo", "dev"]), kind, 1..4)
        .prop_map(|m| m.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

proptest! {
    #[test]
    fn tally_ignores_ballot_order(ballots in prop::collection::vec(ballot_strategy(), 0..30), seed in any::<u64>()) {
        let roster = six_shows()[0].roster.clone();
        let mut shuffled = ballots.clone();
        let mut rng = seed;
        for i in (1..shuffled.len()).rev() {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (rng >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(tally(&roster, &ballots), tally(&roster, &shuffled));
    }
}
