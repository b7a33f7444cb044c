mod common;

use bcsa_core::oracle::configuration_count;
use bcsa_core::sweep::{run_sweep, HandshakeSetting, LoadPoints, SweepConfig};
use bcsa_core::{enumerate_exact, DegreeDistribution, Estimate, ExactResult, OutcomeClass, ReceiverMode};
use rand::Rng;

const FRAMES: u64 = 1_000_000;

fn within(exact: f64, est: &Estimate, what: &str) {
    let ok = if est.se > 0.0 {
        (est.value - exact).abs() <= 4.0 * est.se
    } else {
        (est.value - exact).abs() < 1e-12
    };
    assert!(ok, "{what}: simulated {} ± {} vs exact {exact}", est.value, est.se);
}

fn compare(exact: &ExactResult, handshake: HandshakeSetting, seed: u64) {
    let inst = &exact.instance;
    let mut config = SweepConfig::new(inst.slots, LoadPoints::Users(vec![inst.users]), inst.dist.clone());
    config.frames = FRAMES;
    config.seed = seed;
    config.mode = inst.mode;
    config.handshake = handshake;
    let result = run_sweep(&config).unwrap();
    let point = &result.points[0];
    let report = &point.report;
    let label = format!("m={} n={} λ={} {:?}", inst.users, inst.slots, inst.dist, inst.mode);
    within(exact.plr, &report.plr, &format!("{label} plr"));
    for (cell, p) in &exact.per_degree_plr {
        match (report.per_degree_plr.get(cell), point.tally.per_degree().get(cell)) {
            (Some(est), Some(c)) if c.observed >= 1000 => within(*p, est, &format!("{label} cell {cell:?}")),
            _ => {}
        }
    }
    for cell in report.per_degree_plr.keys() {
        assert!(exact.per_degree_plr.contains_key(cell), "{label}: impossible cell {cell:?}");
    }
    if inst.mode == ReceiverMode::Broadcast && inst.users > 1 {
        for (i, class) in OutcomeClass::TABLE.iter().enumerate() {
            within(exact.outcome_probs[class], &report.p[i], &format!("{label} {class:?}"));
        }
        within(exact.peer_failure, &report.peer_failure, &format!("{label} peer failure"));
    }
}

#[test]
fn toy_example_by_simulation() {
    let dist = DegreeDistribution::parse("0.5x+0.5x^2").unwrap();
    let exact = enumerate_exact(2, 2, &dist, ReceiverMode::Unicast).unwrap();
    assert!((exact.per_degree_plr[&(0, 1)] - 0.25).abs() < 1e-12);
    assert!((exact.per_degree_plr[&(0, 2)] - 0.5).abs() < 1e-12);
    compare(&exact, HandshakeSetting::Off, 1);
}

#[test]
fn random_tiny_instances_converge() {
    let mut rng = common::rng(99);
    let mut checked = 0;
    while checked < 6 {
        let slots = rng.random_range(1..=4);
        let users = rng.random_range(2..=4);
        let q = rng.random_range(1..=slots.min(3));
        let dist = common::random_dist(&mut rng, q, checked % 3 == 0);
        if configuration_count(users, slots, &dist) > 1e6 {
            continue;
        }
        let mode = if checked == 5 {
            ReceiverMode::Unicast
        } else {
            ReceiverMode::Broadcast
        };
        let exact = enumerate_exact(users, slots, &dist, mode).unwrap();
        compare(&exact, HandshakeSetting::Verify, checked as u64);
        checked += 1;
    }
}

#[test]
fn exact_identities() {
    let mut rng = common::rng(5);
    for _ in 0..25 {
        let slots = rng.random_range(1..=4);
        let users = rng.random_range(2..=4);
        let q = rng.random_range(1..=slots.min(3));
        let zero = rng.random_bool(0.3);
        let dist = common::random_dist(&mut rng, q, zero);
        let exact = enumerate_exact(users, slots, &dist, ReceiverMode::Broadcast).unwrap();
        let p = |c: OutcomeClass| exact.outcome_probs[&c];
        assert_eq!(p(OutcomeClass::Impossible), 0.0);
        let total: f64 = exact.outcome_probs.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let eq5 = p(OutcomeClass::FailureDetected) + p(OutcomeClass::FalseHandshake) + p(OutcomeClass::AuxiliaryBothFail);
        assert!((eq5 - exact.peer_failure).abs() < 1e-12);
        let dual = p(OutcomeClass::AuxiliaryBothFail) + p(OutcomeClass::AuxiliaryPeerOk);
        assert!((dual - exact.plr).abs() < 1e-12);
    }
}

#[test]
fn single_user_has_no_pairs() {
    let dist = DegreeDistribution::parse("0.4x+0.6x2").unwrap();
    for slots in 2..5 {
        let exact = enumerate_exact(1, slots, &dist, ReceiverMode::Broadcast).unwrap();
        assert!(exact.outcome_probs.is_empty());
        assert!(exact.per_degree_plr.is_empty());
    }
}
