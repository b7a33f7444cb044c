//! Exact results for tiny frames by exhaustive enumeration.
//!
//! Every joint assignment of (degree, slot subset) over all users is visited
//! and weighted by its probability `Π_u λ_{l_u} / C(n, l_u)`. Decoding and the
//! handshake run on the explicit graph views, independently of the frame
//! analyzer used by the simulator.

use std::collections::BTreeMap;

use crate::decoder::peel;
use crate::distribution::DegreeDistribution;
use crate::error::{Error, Result};
use crate::graph::{induced_view, FrameGraph, ReceiverMode, SlotId};
use crate::handshake::{classify_pairs_explicit, OutcomeClass};

/// Largest number of weighted configurations `enumerate_exact` will visit.
pub const MAX_CONFIGURATIONS: f64 = 1e7;

/// Compensated floating-point sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub users: usize,
    pub slots: usize,
    pub dist: DegreeDistribution,
    pub mode: ReceiverMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub instance: Instance,
    /// `(receiver degree, observed peer degree)` → exact PLR. The receiver
    /// degree is 0 in unicast mode.
    pub per_degree_plr: BTreeMap<(usize, usize), f64>,
    /// Probability of each outcome for an ordered pair of distinct users.
    /// Empty in unicast mode and when there are fewer than two users.
    pub outcome_probs: BTreeMap<OutcomeClass, f64>,
    /// Probability that a given peer is unresolved by a given receiver.
    pub plr: f64,
    /// `Pr{G_B(A) = 0}` counted directly over ordered pairs.
    pub peer_failure: f64,
}

struct Choice {
    slots: Vec<SlotId>,
    weight: f64,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<SlotId>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<SlotId>, out: &mut Vec<Vec<SlotId>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for s in start..n {
            if n - s < k - current.len() {
                break;
            }
            current.push(s);
            rec(s + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

/// Number of weighted configurations for `users` users on `slots` slots.
pub fn configuration_count(users: usize, slots: usize, dist: &DegreeDistribution) -> f64 {
    let per_user: f64 = dist
        .support()
        .map(|l| crate::analysis::ln_choose(slots, l).exp())
        .sum();
    per_user.powi(users as i32)
}

pub fn enumerate_exact(
    users: usize,
    slots: usize,
    dist: &DegreeDistribution,
    mode: ReceiverMode,
) -> Result<ExactResult> {
    if slots == 0 || slots < dist.max_degree() {
        return Err(Error::Config(format!(
            "{slots} slots cannot hold a degree-{} user",
            dist.max_degree()
        )));
    }
    let configurations = configuration_count(users, slots, dist);
    if configurations > MAX_CONFIGURATIONS {
        return Err(Error::TooLarge {
            configurations,
            limit: MAX_CONFIGURATIONS,
        });
    }

    let choices: Vec<Choice> = dist
        .support()
        .flat_map(|l| {
            let subsets = combinations(slots, l);
            let weight = dist.prob(l) / subsets.len() as f64;
            subsets.into_iter().map(move |s| Choice { slots: s, weight })
        })
        .collect();

    let pairs = (users * users.saturating_sub(1)) as f64;
    let mut observed: BTreeMap<(usize, usize), KahanSum> = BTreeMap::new();
    let mut unresolved: BTreeMap<(usize, usize), KahanSum> = BTreeMap::new();
    let mut outcomes: BTreeMap<OutcomeClass, KahanSum> = BTreeMap::new();
    let mut plr = KahanSum::default();
    let mut peer_failure = KahanSum::default();

    let mut index = vec![0usize; users];
    loop {
        let weight: f64 = index.iter().map(|i| choices[*i].weight).product();
        let sets = index.iter().map(|i| choices[*i].slots.clone()).collect();
        let graph = FrameGraph::from_slot_sets(slots, sets)?;

        match mode {
            ReceiverMode::Unicast => {
                let out = peel(&induced_view(&graph, 0, ReceiverMode::Unicast)?);
                let mut lost = 0usize;
                for u in 0..users {
                    let cell = (0, graph.degree(u));
                    observed.entry(cell).or_default().add(weight);
                    if !out.is_resolved(u) {
                        unresolved.entry(cell).or_default().add(weight);
                        lost += 1;
                    }
                }
                if users > 0 {
                    plr.add(weight * lost as f64 / users as f64);
                }
            }
            ReceiverMode::Broadcast => {
                let outs = (0..users)
                    .map(|u| induced_view(&graph, u, ReceiverMode::Broadcast).map(|v| peel(&v)))
                    .collect::<Result<Vec<_>>>()?;
                let mut lost = 0usize;
                for a in 0..users {
                    let own = graph.slots_of(a);
                    for b in (0..users).filter(|b| *b != a) {
                        let d = graph.slots_of(b).iter().filter(|s| !own.contains(s)).count();
                        let cell = (graph.degree(a), d);
                        observed.entry(cell).or_default().add(weight);
                        if !outs[a].is_resolved(b) {
                            unresolved.entry(cell).or_default().add(weight);
                            lost += 1;
                        }
                    }
                }
                if users > 1 {
                    plr.add(weight * lost as f64 / pairs);
                    let mut failures = 0usize;
                    for ((a, b), class) in classify_pairs_explicit(&graph)? {
                        outcomes.entry(class).or_default().add(weight / pairs);
                        if !outs[b].is_resolved(a) {
                            failures += 1;
                        }
                    }
                    peer_failure.add(weight * failures as f64 / pairs);
                }
            }
        }

        // Advance the mixed-radix counter over users' choices.
        let mut u = 0;
        while u < users {
            index[u] += 1;
            if index[u] < choices.len() {
                break;
            }
            index[u] = 0;
            u += 1;
        }
        if u == users {
            break;
        }
    }

    let per_degree_plr = observed
        .iter()
        .filter(|(_, o)| o.value() > 0.0)
        .map(|(cell, o)| {
            let w = unresolved.get(cell).map(KahanSum::value).unwrap_or(0.0);
            (*cell, w / o.value())
        })
        .collect();
    let mut outcome_probs: BTreeMap<OutcomeClass, f64> = BTreeMap::new();
    if mode == ReceiverMode::Broadcast && users > 1 {
        for class in OutcomeClass::TABLE.into_iter().chain([OutcomeClass::Impossible]) {
            outcome_probs.insert(class, outcomes.get(&class).map(KahanSum::value).unwrap_or(0.0));
        }
    }
    Ok(ExactResult {
        instance: Instance {
            users,
            slots,
            dist: dist.clone(),
            mode,
        },
        per_degree_plr,
        outcome_probs,
        plr: plr.value(),
        peer_failure: peer_failure.value(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_example() {
        let d = DegreeDistribution::parse("0.5x+0.5x^2").unwrap();
        let r = enumerate_exact(2, 2, &d, ReceiverMode::Unicast).unwrap();
        assert!((r.per_degree_plr[&(0, 1)] - 0.25).abs() < 1e-12);
        assert!((r.per_degree_plr[&(0, 2)] - 0.5).abs() < 1e-12);
        assert!(r.outcome_probs.is_empty());
    }

    #[test]
    fn single_slot_collision() {
        let d = DegreeDistribution::degenerate(1);
        let r = enumerate_exact(2, 1, &d, ReceiverMode::Unicast).unwrap();
        assert_eq!(r.per_degree_plr, BTreeMap::from([((0, 1), 1.0)]));
        assert_eq!(r.plr, 1.0);
    }

    #[test]
    fn lone_user() {
        let d = DegreeDistribution::degenerate(2);
        let r = enumerate_exact(1, 3, &d, ReceiverMode::Broadcast).unwrap();
        assert!(r.outcome_probs.is_empty());
        assert!(r.per_degree_plr.is_empty());
    }

    #[test]
    fn outcome_probabilities_sum_to_one() {
        let d = DegreeDistribution::parse("0.3x+0.7x2").unwrap();
        let r = enumerate_exact(3, 3, &d, ReceiverMode::Broadcast).unwrap();
        let total: f64 = r.outcome_probs.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(r.outcome_probs[&OutcomeClass::Impossible], 0.0);
    }

    #[test]
    fn size_limit() {
        let d = DegreeDistribution::degenerate(3);
        match enumerate_exact(6, 20, &d, ReceiverMode::Unicast) {
            Err(Error::TooLarge { limit, .. }) => assert_eq!(limit, MAX_CONFIGURATIONS),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn combinations_are_complete() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }
}
