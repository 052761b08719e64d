//! Randomized operation sequences checked against a plain reference model of
//! the delivery queues.

use std::collections::{BTreeMap, VecDeque};

use earpiece_core::show::{
    LineDraft, RoleKind, ShowConfig, ShowError, ShowEvent, ShowSession, Transcript, UtteranceStatus,
};
use earpiece_core::Source;
use proptest::prelude::*;

const FED: [&str; 3] = ["cy", "pu1", "pu2"];

#[derive(Debug, Clone)]
enum Op {
    Enqueue { who: usize, interrupting: bool, lag: u64, source: usize },
    Next { who: usize },
    Skip { who: usize, pick: usize },
    Ack { who: usize },
    StartScene,
    EndScene,
    Wait(u64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        6 => (0..3usize, prop::bool::weighted(0.2), 0..3_000u64, 0..4usize)
            .prop_map(|(who, interrupting, lag, source)| Op::Enqueue { who, interrupting, lag, source }),
        4 => (0..3usize).prop_map(|who| Op::Next { who }),
        2 => (0..3usize, 0..8usize).prop_map(|(who, pick)| Op::Skip { who, pick }),
        2 => (0..3usize).prop_map(|who| Op::Ack { who }),
        1 => Just(Op::StartScene),
        1 => Just(Op::EndScene),
        3 => (0..2_000u64).prop_map(Op::Wait),
    ]
}

#[derive(Default)]
struct Model {
    queues: BTreeMap<&'static str, VecDeque<u64>>,
    status: BTreeMap<u64, UtteranceStatus>,
    last_delivered: BTreeMap<&'static str, u64>,
    scene_open: bool,
    next_id: u64,
}

fn live_session() -> ShowSession {
    let mut s = ShowSession::new("prop", ShowConfig::default());
    s.assign_role("cy", RoleKind::Cyborg, true, 0).unwrap();
    s.assign_role("pu1", RoleKind::Puppet, true, 0).unwrap();
    s.assign_role("pu2", RoleKind::Puppet, true, 0).unwrap();
    s.assign_role("fw", RoleKind::FreeWill, true, 0).unwrap();
    s.assign_role("ceo", RoleKind::CeoController, false, 0).unwrap();
    s.assign_role("pm", RoleKind::PuppetMaster, false, 0).unwrap();
    s.go_live(0).unwrap();
    s
}

fn check_conservation(s: &ShowSession) {
    let enqueued = s.enqueued_count();
    let delivered = s.count_with_status(UtteranceStatus::Delivered);
    let skipped = s.count_with_status(UtteranceStatus::Skipped);
    let queued: usize = FED.iter().map(|p| s.queue(p).len()).sum();
    assert_eq!(enqueued, delivered + skipped + queued);
    assert_eq!(queued, s.count_with_status(UtteranceStatus::Queued));
}

fn run(ops: &[Op]) -> ShowSession {
    let mut s = live_session();
    let mut m = Model {
        next_id: 1,
        ..Model::default()
    };
    for p in FED {
        m.queues.insert(p, VecDeque::new());
    }
    let mut now = 0u64;
    for op in ops {
        now += 1;
        match *op {
            Op::Enqueue { who, interrupting, lag, source } => {
                let p = FED[who];
                let draft = LineDraft {
                    text: format!("line {}", m.next_id),
                    source: Source::ALL[source],
                    created_at: now.saturating_sub(lag),
                };
                let result = s.enqueue_line(p, draft, interrupting, now);
                if m.scene_open {
                    let rec = result.unwrap();
                    assert_eq!(rec.utterance_id, m.next_id);
                    let q = m.queues.get_mut(p).unwrap();
                    if interrupting {
                        q.push_front(m.next_id);
                    } else {
                        q.push_back(m.next_id);
                    }
                    assert_eq!(rec.position, q.iter().position(|&id| id == m.next_id).unwrap());
                    m.status.insert(m.next_id, UtteranceStatus::Queued);
                    m.next_id += 1;
                } else {
                    assert_eq!(result.unwrap_err(), ShowError::NoOpenScene);
                }
            }
            Op::Next { who } => {
                let p = FED[who];
                let got = s.next_line(p, now).unwrap().map(|u| u.id);
                let want = m.queues.get_mut(p).unwrap().pop_front();
                assert_eq!(got, want);
                if let Some(id) = want {
                    m.status.insert(id, UtteranceStatus::Delivered);
                    m.last_delivered.insert(p, id);
                }
            }
            Op::Skip { who, pick } => {
                let p = FED[who];
                let q = m.queues.get_mut(p).unwrap();
                if q.is_empty() {
                    // skipping an already delivered line must fail
                    if let Some(&id) = m.last_delivered.get(p) {
                        assert!(matches!(s.skip_line(p, id, now), Err(ShowError::WrongLineStatus { .. })));
                    }
                } else {
                    let id = q.remove(pick % q.len()).unwrap();
                    s.skip_line(p, id, now).unwrap();
                    m.status.insert(id, UtteranceStatus::Skipped);
                }
            }
            Op::Ack { who } => {
                let p = FED[who];
                if let Some(id) = m.last_delivered.remove(p) {
                    s.acknowledge_spoken(p, id, now).unwrap();
                }
            }
            Op::StartScene => {
                let r = s.start_scene(format!("scene at {now}"), now);
                assert_eq!(r.is_ok(), !m.scene_open);
                m.scene_open = true;
            }
            Op::EndScene => {
                let r = s.end_scene(now);
                assert_eq!(r.is_ok(), m.scene_open);
                m.scene_open = false;
            }
            Op::Wait(ms) => now += ms,
        }
        check_conservation(&s);
        for p in FED {
            assert_eq!(s.queue(p), m.queues[p].iter().copied().collect::<Vec<_>>());
        }
        for (id, status) in &m.status {
            assert_eq!(s.utterance(*id).unwrap().status, *status);
        }
    }
    if m.scene_open {
        s.end_scene(now + 1).unwrap();
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn thousand_step_sequences_hold_invariants(ops in prop::collection::vec(op(), 1_000)) {
        let mut s = run(&ops);

        let times: Vec<u64> = s.log().iter().map(|e| e.at).collect();
        prop_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        let rebuilt = ShowSession::from_log(s.id(), *s.config(), s.log()).unwrap();
        prop_assert_eq!(&rebuilt, &s);

        for scene in s.scenes() {
            let delivered: Vec<u64> = scene.turns.iter().map(|id| s.utterance(*id).unwrap().delivered_at.unwrap()).collect();
            prop_assert!(delivered.windows(2).all(|w| w[0] <= w[1]));
        }

        let t = s.last_at() + 10;
        s.open_voting(t).unwrap();
        s.submit_vote("aud", [("fw".to_string(), RoleKind::Cyborg)].into(), t + 1).unwrap();
        s.close(t + 2).unwrap();

        let transcript = Transcript::from_session(&s).unwrap();
        let skipped: Vec<u64> = s.utterances().filter(|u| u.status == UtteranceStatus::Skipped).map(|u| u.id).collect();
        prop_assert!(transcript.utterances().all(|u| !skipped.contains(&u.id)));
        prop_assert_eq!(transcript.utterances().count(), s.enqueued_count() - skipped.len());

        let enqueue_events = s.log().iter().filter(|e| matches!(e.event, ShowEvent::LineEnqueued { .. })).count();
        prop_assert_eq!(enqueue_events, s.enqueued_count());

        let first = transcript.to_json();
        let replayed = Transcript::from_json(&first).unwrap().replay().unwrap();
        let second = Transcript::from_session(&replayed).unwrap().to_json();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(replayed.latency_stats(), s.latency_stats());
        prop_assert_eq!(replayed.tally(), s.tally());
    }
}

#[test]
fn mixed_source_counts_match_enqueue_history() {
    let ops: Vec<Op> = (0..200)
        .map(|i| match i % 7 {
            0 => Op::StartScene,
            1..=3 => Op::Enqueue { who: i % 3, interrupting: i % 5 == 0, lag: 1_500, source: i % 4 },
            4 => Op::Next { who: i % 3 },
            5 => Op::Skip { who: i % 3, pick: i },
            _ => Op::EndScene,
        })
        .collect();
    let mut s = run(&ops);
    s.open_voting(s.last_at() + 1).unwrap();
    let transcript = Transcript::from_session(&s).unwrap();

    // brute-force count over the event log
    let mut skipped = std::collections::BTreeSet::new();
    for e in s.log() {
        if let ShowEvent::LineSkipped { utterance_id } = e.event {
            skipped.insert(utterance_id);
        }
    }
    let mut expected: BTreeMap<Source, usize> = BTreeMap::new();
    for e in s.log() {
        if let ShowEvent::LineEnqueued { utterance_id, source, .. } = &e.event {
            if !skipped.contains(utterance_id) {
                *expected.entry(*source).or_insert(0) += 1;
            }
        }
    }
    assert!(!skipped.is_empty());
    assert_eq!(transcript.manifest.lines_by_source, expected);
}
