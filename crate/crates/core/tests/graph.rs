mod common;

use std::collections::BTreeSet;

use bcsa_core::{generate_frame, induced_view, DegreeDistribution, FrameGraph, ReceiverMode};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn frame_strategy() -> impl Strategy<Value = FrameGraph> {
    (0usize..40, 1usize..50, 1usize..6, any::<u64>()).prop_map(|(users, slots, q, seed)| {
        common::random_frame(&mut common::rng(seed), users, slots, q)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn inverse_index_is_consistent(graph in frame_strategy()) {
        let mut rebuilt = vec![Vec::new(); graph.slot_count()];
        for u in 0..graph.user_count() {
            for &s in graph.slots_of(u) {
                rebuilt[s].push(u);
            }
        }
        for (s, users) in rebuilt.iter().enumerate() {
            prop_assert_eq!(users.as_slice(), graph.users_in(s));
        }
        let sets: Vec<Vec<usize>> = (0..graph.user_count()).map(|u| graph.slots_of(u).to_vec()).collect();
        prop_assert_eq!(FrameGraph::from_slot_sets(graph.slot_count(), sets).unwrap(), graph);
    }

    #[test]
    fn slot_sets_are_distinct_and_in_range(graph in frame_strategy()) {
        for u in 0..graph.user_count() {
            let set: BTreeSet<_> = graph.slots_of(u).iter().copied().collect();
            prop_assert_eq!(set.len(), graph.degree(u));
            prop_assert!(set.iter().all(|s| *s < graph.slot_count()));
        }
    }

    #[test]
    fn broadcast_view_excludes_owner(graph in frame_strategy()) {
        for u in 0..graph.user_count() {
            let view = induced_view(&graph, u, ReceiverMode::Broadcast).unwrap();
            for s in 0..graph.slot_count() {
                let own = graph.slots_of(u).contains(&s);
                prop_assert_eq!(view.is_visible(s), !own);
                prop_assert!(!view.occupants(s).contains(&u));
                if view.is_visible(s) {
                    prop_assert_eq!(view.occupants(s), graph.users_in(s));
                }
            }
        }
    }

    #[test]
    fn unicast_view_is_whole_frame(graph in frame_strategy()) {
        let view = induced_view(&graph, 0, ReceiverMode::Unicast).unwrap();
        prop_assert_eq!(view.visible_slots().count(), graph.slot_count());
        prop_assert_eq!(view.edge_count(), graph.edge_count());
    }

    #[test]
    fn render_parse_round_trip(seed in any::<u64>(), q in 1usize..12, zero in any::<bool>()) {
        let dist = common::random_dist(&mut common::rng(seed), q, zero);
        let back = DegreeDistribution::parse(&dist.render()).unwrap();
        prop_assert_eq!(back.max_degree(), dist.max_degree());
        for (a, b) in back.probs().iter().zip(dist.probs()) {
            prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
        }
    }
}

#[test]
fn sampled_degrees_fit_the_distribution() {
    let dist = DegreeDistribution::parse("0.1+0.25x2+0.5x3+0.15x8").unwrap();
    let mut rng = common::rng(11);
    let mut counts = vec![0u64; dist.max_degree() + 1];
    let (frames, users) = (1000, 1000);
    for _ in 0..frames {
        let graph = generate_frame(users, 20, &dist, &mut rng).unwrap();
        for u in 0..users {
            counts[graph.slots_of(u).len()] += 1;
        }
    }
    let total = (frames * users) as f64;
    let support: Vec<usize> = dist.support().collect();
    assert_eq!(counts.iter().sum::<u64>(), total as u64);
    assert!(counts.iter().enumerate().all(|(l, c)| *c == 0 || dist.prob(l) > 0.0));
    let stat: f64 = support
        .iter()
        .map(|&l| {
            let expected = total * dist.prob(l);
            (counts[l] as f64 - expected).powi(2) / expected
        })
        .sum();
    let df = (support.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(df).unwrap().cdf(stat);
    assert!(p > 0.001, "chi-square {stat} on {df} degrees of freedom, p = {p}");
}

#[test]
fn mean_edge_count() {
    let dist = DegreeDistribution::parse("0.86x3+0.14x8").unwrap();
    let (users, slots, frames) = (1000, 200, 2000);
    let mean = dist.mean();
    let var: f64 = dist.support().map(|l| dist.prob(l) * (l as f64 - mean).powi(2)).sum();
    let mut rng = common::rng(5);
    let total: usize = (0..frames)
        .map(|_| generate_frame(users, slots, &dist, &mut rng).unwrap().edge_count())
        .sum();
    let observed = total as f64 / frames as f64;
    let sigma = (users as f64 * var / frames as f64).sqrt();
    assert!(
        (observed - users as f64 * mean).abs() < 3.0 * sigma,
        "{observed} vs {}",
        users as f64 * mean
    );
}

#[test]
fn slot_subsets_are_uniform() {
    // All C(5, 2) = 10 subsets should be equally likely.
    let dist = DegreeDistribution::degenerate(2);
    let mut rng = common::rng(3);
    let mut counts = std::collections::BTreeMap::new();
    let draws = 200_000;
    for _ in 0..draws / 100 {
        let graph = generate_frame(100, 5, &dist, &mut rng).unwrap();
        for u in 0..100 {
            *counts.entry(graph.slots_of(u).to_vec()).or_insert(0u64) += 1;
        }
    }
    assert_eq!(counts.len(), 10);
    let expected = draws as f64 / 10.0;
    let stat: f64 = counts.values().map(|c| (*c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(9.0).unwrap().cdf(stat);
    assert!(p > 0.001, "p = {p}");
}
