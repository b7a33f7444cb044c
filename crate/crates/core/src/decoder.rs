//! Peeling (successive interference cancellation) decoder.
//!
//! A slot whose known occupants contain exactly one unresolved user is a
//! singleton: that user's packet is decoded, its copy pointers reveal its
//! other slots, and its contribution is cancelled everywhere in the view.
//! The process stops when no singleton is left. The set of resolved users
//! does not depend on the order in which singletons are taken.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::graph::{GraphView, SlotId, UserId};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodeOutcome {
    pub resolved: BTreeSet<UserId>,
    /// Resolution events in the order they happened.
    pub order: Vec<(SlotId, UserId)>,
    /// Visible slots that still hold an unresolved occupant.
    pub residual_slots: BTreeSet<SlotId>,
}

impl DecodeOutcome {
    pub fn is_resolved(&self, user: UserId) -> bool {
        self.resolved.contains(&user)
    }
}

/// Peels `view`, always taking the lowest-numbered singleton slot next.
pub fn peel(view: &GraphView) -> DecodeOutcome {
    peel_until(view, None)
}

/// Like [`peel`], but stops as soon as `target` is resolved.
pub fn peel_until(view: &GraphView, target: Option<UserId>) -> DecodeOutcome {
    let adjacency = view.adjacency();
    let slots = view.slot_count();
    let mut remaining: Vec<usize> = (0..slots).map(|s| view.occupants(s).len()).collect();
    let mut resolved = vec![false; view.user_count()];
    let mut heap: BinaryHeap<Reverse<SlotId>> = (0..slots)
        .filter(|s| remaining[*s] == 1)
        .map(Reverse)
        .collect();
    let mut outcome = DecodeOutcome::default();

    while let Some(Reverse(slot)) = heap.pop() {
        if remaining[slot] != 1 {
            continue;
        }
        let user = *view
            .occupants(slot)
            .iter()
            .find(|u| !resolved[**u])
            .expect("singleton slot has an unresolved occupant");
        resolved[user] = true;
        outcome.resolved.insert(user);
        outcome.order.push((slot, user));
        for &s in &adjacency[user] {
            remaining[s] -= 1;
            if remaining[s] == 1 {
                heap.push(Reverse(s));
            }
        }
        if target == Some(user) {
            break;
        }
    }
    outcome.residual_slots = (0..slots).filter(|s| remaining[*s] > 0).collect();
    outcome
}

/// Peels `view` letting `choose` pick which singleton to take at each step.
///
/// `choose` receives the current singleton slots in ascending order and
/// returns an index into that list.
pub fn peel_by(view: &GraphView, mut choose: impl FnMut(&[SlotId]) -> usize) -> DecodeOutcome {
    let adjacency = view.adjacency();
    let slots = view.slot_count();
    let mut remaining: Vec<usize> = (0..slots).map(|s| view.occupants(s).len()).collect();
    let mut resolved = vec![false; view.user_count()];
    let mut outcome = DecodeOutcome::default();
    loop {
        let singletons: Vec<SlotId> = (0..slots).filter(|s| remaining[*s] == 1).collect();
        if singletons.is_empty() {
            break;
        }
        let slot = singletons[choose(&singletons)];
        let user = *view
            .occupants(slot)
            .iter()
            .find(|u| !resolved[**u])
            .expect("singleton slot has an unresolved occupant");
        resolved[user] = true;
        outcome.resolved.insert(user);
        outcome.order.push((slot, user));
        for &s in &adjacency[user] {
            remaining[s] -= 1;
        }
    }
    outcome.residual_slots = (0..slots).filter(|s| remaining[*s] > 0).collect();
    outcome
}

/// Checks that `outcome.order` is a valid peeling schedule for `view` and
/// that it leaves no singleton behind.
pub fn is_valid_schedule(view: &GraphView, outcome: &DecodeOutcome) -> bool {
    let mut resolved = vec![false; view.user_count()];
    for &(slot, user) in &outcome.order {
        if !view.visible_slots().any(|s| s == slot) || resolved[user] {
            return false;
        }
        let unresolved: Vec<UserId> = view
            .occupants(slot)
            .iter()
            .copied()
            .filter(|u| !resolved[*u])
            .collect();
        if unresolved != [user] {
            return false;
        }
        resolved[user] = true;
    }
    let mut residual = BTreeSet::new();
    for s in view.visible_slots() {
        let left = view.occupants(s).iter().filter(|u| !resolved[**u]).count();
        if left == 1 {
            return false;
        }
        if left > 1 {
            residual.insert(s);
        }
    }
    let resolved_set: BTreeSet<UserId> = outcome.order.iter().map(|(_, u)| *u).collect();
    resolved_set == outcome.resolved && residual == outcome.residual_slots
}
