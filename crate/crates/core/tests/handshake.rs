mod common;

use std::collections::BTreeMap;

use bcsa_core::handshake::classify_pairs_explicit;
use bcsa_core::{
    handshake_frame, induced_view, peel, reconstruct, Counter, DecodeOutcome, FrameAnalyzer, FrameGraph,
    HandshakeMode, OutcomeClass, ReceiverMode,
};
use rand::Rng;

fn frame(seed: u64) -> FrameGraph {
    let mut rng = common::rng(seed);
    let slots = rng.random_range(4..40);
    let load: f64 = rng.random_range(0.2..1.1);
    let q = rng.random_range(1..5);
    common::random_frame(&mut rng, (load * slots as f64) as usize, slots, q)
}

fn decodes(graph: &FrameGraph) -> Vec<DecodeOutcome> {
    (0..graph.user_count())
        .map(|u| peel(&induced_view(graph, u, ReceiverMode::Broadcast).unwrap()))
        .collect()
}

#[test]
fn analyzer_matches_explicit_views() {
    for seed in 0..2000 {
        let graph = frame(seed);
        let mut explicit: BTreeMap<OutcomeClass, u64> = BTreeMap::new();
        for (_, class) in classify_pairs_explicit(&graph).unwrap() {
            *explicit.entry(class).or_default() += 1;
        }
        for mode in [HandshakeMode::Fast, HandshakeMode::Verify] {
            let tally = handshake_frame(&graph, mode);
            for class in OutcomeClass::TABLE.into_iter().chain([OutcomeClass::Impossible]) {
                assert_eq!(
                    tally.count(class.counter()),
                    explicit.get(&class).copied().unwrap_or(0),
                    "frame {seed}, {class:?}, {mode:?}"
                );
            }
        }
    }
}

#[test]
fn count_identities_hold_on_every_frame() {
    for seed in 0..2000 {
        let graph = frame(seed);
        let m = graph.user_count() as u64;
        let outs = decodes(&graph);
        let mut a_fails_b = 0;
        let mut b_fails_a = 0;
        for a in 0..graph.user_count() {
            for b in (0..graph.user_count()).filter(|b| *b != a) {
                a_fails_b += u64::from(!outs[a].is_resolved(b));
                b_fails_a += u64::from(!outs[b].is_resolved(a));
            }
        }
        let counts = FrameAnalyzer::new(&graph).handshake_counts(HandshakeMode::Verify, None);
        let c = |k: Counter| counts.counters[k as usize];
        let table: u64 = OutcomeClass::TABLE.iter().map(|o| c(o.counter())).sum();
        assert_eq!(table, m * m.saturating_sub(1), "partition, frame {seed}");
        assert_eq!(c(Counter::Impossible), 0);
        assert_eq!(
            c(Counter::FailureDetected) + c(Counter::FalseHandshake) + c(Counter::AuxiliaryBothFail),
            b_fails_a,
            "peer failures, frame {seed}"
        );
        assert_eq!(
            c(Counter::AuxiliaryBothFail) + c(Counter::AuxiliaryPeerOk),
            a_fails_b,
            "receiver failures, frame {seed}"
        );
        assert_eq!(a_fails_b, b_fails_a);
        assert_eq!(c(Counter::Unresolved), a_fails_b);
        assert_eq!(c(Counter::Observed), m * m.saturating_sub(1));
    }
}

#[test]
fn peer_prediction_view_is_inside_the_peer_view() {
    let mut evaluated = 0;
    for seed in 0..2000 {
        let graph = frame(seed);
        let outs = decodes(&graph);
        for a in 0..graph.user_count() {
            let recon = reconstruct(&graph, a, &outs[a]).unwrap();
            for &b in &recon.resolved_peers {
                let predicted = recon.peer_view(b).unwrap();
                let truth = induced_view(&graph, b, ReceiverMode::Broadcast).unwrap();
                assert!(predicted.is_subgraph_of(&truth), "frame {seed}, pair ({a}, {b})");
                evaluated += 1;
            }
        }
    }
    assert!(evaluated > 10_000, "only {evaluated} pairs evaluated");
}

#[test]
fn fast_and_verify_agree() {
    for seed in 0..10_000 {
        let graph = frame(seed + 50_000);
        let mut analyzer = FrameAnalyzer::new(&graph);
        let fast = analyzer.handshake_counts(HandshakeMode::Fast, None);
        let verify = analyzer.handshake_counts(HandshakeMode::Verify, None);
        assert_eq!(fast.counters, verify.counters, "frame {seed}");
        assert_eq!(fast.per_degree, verify.per_degree, "frame {seed}");
        assert!(fast.evaluated <= verify.evaluated);
    }
}

#[test]
fn reference_receivers_restrict_the_pairs() {
    let graph = frame(7);
    let m = graph.user_count();
    let all = FrameAnalyzer::new(&graph).handshake_counts(HandshakeMode::Verify, None);
    let mut summed = [0u64; 8];
    for a in 0..m {
        let one = FrameAnalyzer::new(&graph).handshake_counts(HandshakeMode::Verify, Some(&[a]));
        assert_eq!(one.counters[Counter::Observed as usize], (m - 1) as u64);
        for (s, c) in summed.iter_mut().zip(one.counters) {
            *s += c;
        }
    }
    assert_eq!(summed, all.counters);
}

#[test]
fn unicast_and_broadcast_counts_are_consistent() {
    for seed in 0..500 {
        let graph = frame(seed);
        let m = graph.user_count();
        let reference = peel(&induced_view(&graph, 0, ReceiverMode::Unicast).unwrap());
        let unicast = FrameAnalyzer::new(&graph).unicast_counts();
        assert_eq!(unicast.counters[Counter::Observed as usize], m as u64);
        assert_eq!(
            unicast.counters[Counter::Unresolved as usize],
            (m - reference.resolved.len()) as u64
        );
        let outs = decodes(&graph);
        let broadcast = FrameAnalyzer::new(&graph).broadcast_counts(None);
        let lost: usize = (0..m)
            .map(|a| (0..m).filter(|b| *b != a && !outs[a].is_resolved(*b)).count())
            .sum();
        assert_eq!(broadcast.counters[Counter::Unresolved as usize], lost as u64);
        assert_eq!(broadcast.counters[Counter::Successful as usize], 0);
    }
}
