//! Frame graphs and receiver views.
//!
//! A frame is a bipartite graph between users (variable nodes) and slots
//! (check nodes). An edge `(u, s)` means user `u` transmits a copy of its
//! packet in slot `s`. Users and slots are dense integer ids starting at 0.

use std::collections::BTreeSet;

use rand::Rng;

use crate::distribution::DegreeDistribution;
use crate::error::{Error, Result};

pub type UserId = usize;
pub type SlotId = usize;

/// Who is decoding the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceiverMode {
    /// Every user is a half-duplex receiver and is deaf in its own slots.
    Broadcast,
    /// A base station that hears every slot.
    Unicast,
}

/// Ground truth of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameGraph {
    slots: usize,
    slots_of: Vec<Vec<SlotId>>,
    users_in: Vec<Vec<UserId>>,
}

impl FrameGraph {
    /// Builds a frame from each user's slot list.
    ///
    /// Slot lists are sorted; duplicates and out-of-range slots are rejected.
    pub fn from_slot_sets(slots: usize, slot_sets: Vec<Vec<SlotId>>) -> Result<Self> {
        if slots == 0 {
            return Err(Error::Config("a frame needs at least one slot".into()));
        }
        let mut users_in = vec![Vec::new(); slots];
        let mut slots_of = Vec::with_capacity(slot_sets.len());
        for (user, mut set) in slot_sets.into_iter().enumerate() {
            set.sort_unstable();
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Domain(format!("user {user} repeats a slot")));
            }
            if let Some(&s) = set.last().filter(|s| **s >= slots) {
                return Err(Error::Domain(format!("user {user} uses slot {s} of {slots}")));
            }
            for &s in &set {
                users_in[s].push(user);
            }
            slots_of.push(set);
        }
        Ok(Self {
            slots,
            slots_of,
            users_in,
        })
    }

    pub fn slot_count(&self) -> usize {
        self.slots
    }

    pub fn user_count(&self) -> usize {
        self.slots_of.len()
    }

    /// Channel load `g = m / n`.
    pub fn load(&self) -> f64 {
        self.user_count() as f64 / self.slots as f64
    }

    /// Sorted transmission slots of `user`.
    pub fn slots_of(&self, user: UserId) -> &[SlotId] {
        &self.slots_of[user]
    }

    /// Sorted occupants of `slot`.
    pub fn users_in(&self, slot: SlotId) -> &[UserId] {
        &self.users_in[slot]
    }

    pub fn degree(&self, user: UserId) -> usize {
        self.slots_of[user].len()
    }

    pub fn edge_count(&self) -> usize {
        self.slots_of.iter().map(Vec::len).sum()
    }

    pub(crate) fn all_slot_sets(&self) -> &[Vec<SlotId>] {
        &self.slots_of
    }
}

/// Draws a random frame: every user picks a degree from `dist` and that many
/// distinct slots uniformly at random.
pub fn generate_frame<R: Rng + ?Sized>(
    users: usize,
    slots: usize,
    dist: &DegreeDistribution,
    rng: &mut R,
) -> Result<FrameGraph> {
    if slots == 0 || slots < dist.max_degree() {
        return Err(Error::Config(format!(
            "{slots} slots cannot hold a degree-{} user",
            dist.max_degree()
        )));
    }
    let sets = (0..users)
        .map(|_| {
            let degree = dist.sample(rng);
            rand::seq::index::sample(rng, slots, degree).into_vec()
        })
        .collect();
    FrameGraph::from_slot_sets(slots, sets)
}

/// A subgraph of a frame as known to some decoder.
///
/// Slots outside `visible` carry no edges. Users are identified by their
/// frame-level ids; `user_count` bounds the id space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphView {
    visible: Vec<bool>,
    edges: Vec<Vec<UserId>>,
    user_count: usize,
    self_user: Option<UserId>,
}

impl GraphView {
    /// A view with no visible slots.
    pub fn empty(slots: usize, user_count: usize) -> Self {
        Self {
            visible: vec![false; slots],
            edges: vec![Vec::new(); slots],
            user_count,
            self_user: None,
        }
    }

    /// Builds a view from explicit `(slot, occupants)` pairs. Every listed slot
    /// becomes visible.
    pub fn from_edges(
        slots: usize,
        user_count: usize,
        edges: impl IntoIterator<Item = (SlotId, Vec<UserId>)>,
    ) -> Result<Self> {
        let mut view = Self::empty(slots, user_count);
        for (slot, users) in edges {
            if slot >= slots {
                return Err(Error::Domain(format!("slot {slot} of {slots}")));
            }
            if let Some(u) = users.iter().find(|u| **u >= user_count) {
                return Err(Error::Domain(format!("user {u} of {user_count}")));
            }
            view.visible[slot] = true;
            for u in users {
                view.add_edge(slot, u);
            }
        }
        Ok(view)
    }

    pub fn slot_count(&self) -> usize {
        self.visible.len()
    }

    pub fn user_count(&self) -> usize {
        self.user_count
    }

    pub fn self_user(&self) -> Option<UserId> {
        self.self_user
    }

    pub fn set_self_user(&mut self, user: Option<UserId>) {
        self.self_user = user;
    }

    pub fn is_visible(&self, slot: SlotId) -> bool {
        self.visible[slot]
    }

    pub fn visible_slots(&self) -> impl Iterator<Item = SlotId> + '_ {
        self.visible.iter().enumerate().filter(|(_, v)| **v).map(|(s, _)| s)
    }

    /// Known occupants of `slot`, sorted. Empty for invisible slots.
    pub fn occupants(&self, slot: SlotId) -> &[UserId] {
        &self.edges[slot]
    }

    pub fn set_visible(&mut self, slot: SlotId, visible: bool) {
        self.visible[slot] = visible;
        if !visible {
            self.edges[slot].clear();
        }
    }

    /// Adds edge `(slot, user)`; the slot must be visible.
    pub fn add_edge(&mut self, slot: SlotId, user: UserId) {
        debug_assert!(self.visible[slot], "edge into invisible slot {slot}");
        if let Err(at) = self.edges[slot].binary_search(&user) {
            self.edges[slot].insert(at, user);
        }
    }

    pub fn remove_user(&mut self, user: UserId) {
        for occupants in &mut self.edges {
            if let Ok(at) = occupants.binary_search(&user) {
                occupants.remove(at);
            }
        }
        if self.self_user == Some(user) {
            self.self_user = None;
        }
    }

    pub fn edge_set(&self) -> BTreeSet<(SlotId, UserId)> {
        self.edges
            .iter()
            .enumerate()
            .flat_map(|(s, us)| us.iter().map(move |u| (s, *u)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Whether every visible slot and every edge of `self` is also in `other`.
    pub fn is_subgraph_of(&self, other: &GraphView) -> bool {
        self.visible_slots().all(|s| {
            other.visible.get(s).copied().unwrap_or(false)
                && self.edges[s]
                    .iter()
                    .all(|u| other.edges[s].binary_search(u).is_ok())
        })
    }

    /// Visible slots of each user, indexed by user id.
    pub fn adjacency(&self) -> Vec<Vec<SlotId>> {
        let mut adj = vec![Vec::new(); self.user_count];
        for s in self.visible_slots() {
            for &u in &self.edges[s] {
                adj[u].push(s);
            }
        }
        adj
    }
}

/// The part of `graph` that `user` can hear.
///
/// In broadcast mode the user is deaf in its own slots and does not count
/// itself as an occupant. In unicast mode `user` is ignored and the view is the
/// whole frame as heard by a base station.
pub fn induced_view(graph: &FrameGraph, user: UserId, mode: ReceiverMode) -> Result<GraphView> {
    let mut view = GraphView::empty(graph.slot_count(), graph.user_count());
    match mode {
        ReceiverMode::Unicast => {
            for s in 0..graph.slot_count() {
                view.visible[s] = true;
                view.edges[s] = graph.users_in(s).to_vec();
            }
        }
        ReceiverMode::Broadcast => {
            if user >= graph.user_count() {
                return Err(Error::Domain(format!(
                    "user {user} of {} in frame",
                    graph.user_count()
                )));
            }
            view.visible.fill(true);
            for &s in graph.slots_of(user) {
                view.visible[s] = false;
            }
            for s in 0..graph.slot_count() {
                if view.visible[s] {
                    view.edges[s] = graph.users_in(s).to_vec();
                }
            }
        }
    }
    Ok(view)
}
