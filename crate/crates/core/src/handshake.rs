//! Probabilistic handshake.
//!
//! After decoding its induced view, receiver `A` rebuilds what it knows of the
//! frame: the slots it could decode (slots that still hold unresolved
//! interference are dropped together with their edges), the edges of every
//! user it resolved (copy pointers reveal a resolved user's complete slot
//! set), and its own transmissions. To guess whether peer `B` heard it, `A`
//! deletes `B`'s slots from that reconstruction and peels what is left on
//! `B`'s behalf.
//!
//! Each ordered pair `(A, B)` is classified by
//! `g = [G_A(B), A_B(A), G_B(A)]`: whether `A` resolved `B`, what `A`
//! predicts about `B`, and whether `B` really resolved `A`. The prediction is
//! always computed on a subgraph of `B`'s true view, so a user that `A` sees
//! as stuck in `A_B` is stuck in `G_B` too and `[1, 0, 1]` never happens.

use std::collections::{BTreeMap, BTreeSet};

use crate::decoder::{peel, peel_until, DecodeOutcome};
use crate::error::{Error, Result};
use crate::graph::{induced_view, FrameGraph, GraphView, ReceiverMode, SlotId, UserId};
use crate::tally::{Counter, FrameCounts, HandshakeTally, TallyKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutcomeClass {
    /// `[1, 0, 0]`, probability `p1`.
    FailureDetected,
    /// `[1, 1, 0]`, probability `p2`.
    FalseHandshake,
    /// `[0, x, 0]`, probability `p3`.
    AuxiliaryBothFail,
    /// `[0, x, 1]`, probability `p4`.
    AuxiliaryPeerOk,
    /// `[1, 1, 1]`, probability `p5`.
    Successful,
    /// `[1, 0, 1]`.
    Impossible,
}

impl OutcomeClass {
    pub const TABLE: [OutcomeClass; 5] = [
        OutcomeClass::FailureDetected,
        OutcomeClass::FalseHandshake,
        OutcomeClass::AuxiliaryBothFail,
        OutcomeClass::AuxiliaryPeerOk,
        OutcomeClass::Successful,
    ];

    pub fn counter(self) -> Counter {
        match self {
            OutcomeClass::FailureDetected => Counter::FailureDetected,
            OutcomeClass::FalseHandshake => Counter::FalseHandshake,
            OutcomeClass::AuxiliaryBothFail => Counter::AuxiliaryBothFail,
            OutcomeClass::AuxiliaryPeerOk => Counter::AuxiliaryPeerOk,
            OutcomeClass::Successful => Counter::Successful,
            OutcomeClass::Impossible => Counter::Impossible,
        }
    }
}

/// Maps `[G_A(B), A_B(A), G_B(A)]` to its outcome. `a_predicts` is `None`
/// (the table's `x`) exactly when `A` did not resolve `B`.
pub fn classify(a_resolved_b: bool, a_predicts: Option<bool>, b_resolved_a: bool) -> Result<OutcomeClass> {
    use OutcomeClass::*;
    Ok(match (a_resolved_b, a_predicts, b_resolved_a) {
        (true, Some(false), false) => FailureDetected,
        (true, Some(true), false) => FalseHandshake,
        (false, None, false) => AuxiliaryBothFail,
        (false, None, true) => AuxiliaryPeerOk,
        (true, Some(true), true) => Successful,
        (true, Some(false), true) => Impossible,
        (resolved, prediction, _) => {
            return Err(Error::Contract(format!(
                "prediction {prediction:?} is inconsistent with G_A(B) = {}",
                u8::from(resolved)
            )))
        }
    })
}

/// What the receiver knows about the frame after decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconstruction {
    /// All slots except residual ones; edges of the owner and of resolved users.
    pub view: GraphView,
    pub owner: UserId,
    pub resolved_peers: BTreeSet<UserId>,
    /// Complete slot sets of resolved peers, learned from copy pointers.
    pub peer_slots: BTreeMap<UserId, Vec<SlotId>>,
}

/// Rebuilds the frame from `owner`'s point of view. `outcome` must be the
/// peeling result of `owner`'s broadcast induced view.
pub fn reconstruct(graph: &FrameGraph, owner: UserId, outcome: &DecodeOutcome) -> Result<Reconstruction> {
    if owner >= graph.user_count() {
        return Err(Error::Domain(format!("user {owner} of {}", graph.user_count())));
    }
    let own = graph.slots_of(owner);
    if let Some(s) = outcome.residual_slots.iter().find(|s| own.contains(s)) {
        return Err(Error::Contract(format!(
            "slot {s} is residual but belongs to receiver {owner}"
        )));
    }
    if outcome.resolved.contains(&owner) {
        return Err(Error::Contract(format!("receiver {owner} resolved itself")));
    }
    if let Some(u) = outcome.resolved.iter().find(|u| **u >= graph.user_count()) {
        return Err(Error::Contract(format!("resolved user {u} is not in the frame")));
    }

    let slots = graph.slot_count();
    let mut view = GraphView::empty(slots, graph.user_count());
    for s in 0..slots {
        view.set_visible(s, !outcome.residual_slots.contains(&s));
    }
    let mut peer_slots = BTreeMap::new();
    for &peer in &outcome.resolved {
        let peer_set = graph.slots_of(peer);
        debug_assert!(
            peer_set.iter().any(|s| !outcome.residual_slots.contains(s)),
            "resolved user {peer} has every slot in the residual set"
        );
        for &s in peer_set {
            if view.is_visible(s) {
                view.add_edge(s, peer);
            }
        }
        peer_slots.insert(peer, peer_set.to_vec());
    }
    for &s in own {
        view.add_edge(s, owner);
    }
    view.set_self_user(Some(owner));
    Ok(Reconstruction {
        view,
        owner,
        resolved_peers: outcome.resolved.clone(),
        peer_slots,
    })
}

impl Reconstruction {
    /// `A_B`: the reconstruction with `peer` and all of its slots removed.
    pub fn peer_view(&self, peer: UserId) -> Result<GraphView> {
        let slots = self.peer_slots.get(&peer).ok_or(Error::NotResolved(peer))?;
        let mut view = self.view.clone();
        for &s in slots {
            view.set_visible(s, false);
        }
        view.remove_user(peer);
        view.set_self_user(Some(self.owner));
        Ok(view)
    }
}

/// `A_B(A)`: whether the owner concludes that `peer` resolved it.
pub fn evaluate_peer(recon: &Reconstruction, peer: UserId) -> Result<bool> {
    let view = recon.peer_view(peer)?;
    Ok(peel_until(&view, Some(recon.owner)).is_resolved(recon.owner))
}

/// Which ordered pairs run the on-behalf decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HandshakeMode {
    /// Only pairs with `G_A(B) = 1, G_B(A) = 0`; the rest are settled by the
    /// impossibility of `[1, 0, 1]`.
    Fast,
    /// Every pair with `G_A(B) = 1`, counting any `[1, 0, 1]`.
    Verify,
}

/// Runs decoding and the handshake for every ordered pair of distinct users.
pub fn handshake_frame(graph: &FrameGraph, mode: HandshakeMode) -> HandshakeTally {
    let key = TallyKey {
        slots: graph.slot_count(),
        mode: ReceiverMode::Broadcast,
        dist: None,
    };
    HandshakeTally::from_frame(key, &FrameAnalyzer::new(graph).handshake_counts(mode, None))
}

/// Bit set over user ids.
#[derive(Debug, Clone, PartialEq, Eq)]
struct UserSet {
    words: Vec<u64>,
}

impl UserSet {
    fn new(users: usize) -> Self {
        Self {
            words: vec![0; users.div_ceil(64)],
        }
    }

    #[inline]
    fn insert(&mut self, u: UserId) {
        self.words[u >> 6] |= 1 << (u & 63);
    }

    #[inline]
    fn contains(&self, u: UserId) -> bool {
        self.words[u >> 6] >> (u & 63) & 1 == 1
    }

    fn iter(&self) -> impl Iterator<Item = UserId> + '_ {
        self.words.iter().enumerate().flat_map(|(w, bits)| {
            let mut bits = *bits;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + b)
            })
        })
    }
}

/// Per-receiver decoding result kept by the frame analyzer.
struct ReceiverDecode {
    resolved: UserSet,
    residual: Vec<bool>,
    /// `(slot, user)` resolution events in peeling order.
    events: Vec<(SlotId, UserId)>,
}

/// For every user resolved by a receiver, the users and event slots its
/// resolution depended on, transitively, in the receiver's peeling schedule.
///
/// Slots outside a removed set keep their occupants, so if a user's closure
/// avoids both the removed slots and the removed user, replaying the
/// closure's events still resolves it.
struct Dependencies {
    user_words: usize,
    slot_words: usize,
    users: Vec<u64>,
    slots: Vec<u64>,
}

impl Dependencies {
    fn new(user_count: usize, slot_count: usize) -> Self {
        let user_words = user_count.div_ceil(64);
        let slot_words = slot_count.div_ceil(64);
        Self {
            user_words,
            slot_words,
            users: vec![0; user_words * user_count],
            slots: vec![0; slot_words * user_count],
        }
    }

    fn build(&mut self, graph: &FrameGraph, events: &[(SlotId, UserId)]) {
        let (uw, sw) = (self.user_words, self.slot_words);
        for &(s, p) in events {
            let (users, slots) = (&mut self.users, &mut self.slots);
            users[p * uw..(p + 1) * uw].fill(0);
            slots[p * sw..(p + 1) * sw].fill(0);
            users[p * uw + (p >> 6)] |= 1 << (p & 63);
            slots[p * sw + (s >> 6)] |= 1 << (s & 63);
            for &o in graph.users_in(s) {
                if o == p {
                    continue;
                }
                for w in 0..uw {
                    users[p * uw + w] |= users[o * uw + w];
                }
                for w in 0..sw {
                    slots[p * sw + w] |= slots[o * sw + w];
                }
            }
        }
    }

    /// Whether `p`'s resolution survives removing `user` and `removed` slots.
    #[inline]
    fn survives(&self, p: UserId, user: UserId, removed: &[SlotId]) -> bool {
        let (uw, sw) = (self.user_words, self.slot_words);
        self.users[p * uw + (user >> 6)] >> (user & 63) & 1 == 0
            && removed
                .iter()
                .all(|t| self.slots[p * sw + (t >> 6)] >> (t & 63) & 1 == 0)
    }
}

/// Decodes a frame for every receiver and evaluates handshakes.
///
/// This is the hot path of the simulator. Peeling uses per-slot counters of
/// unresolved occupants and the XOR of their ids, so the last unresolved
/// occupant of a slot is read off directly.
pub struct FrameAnalyzer<'g> {
    graph: &'g FrameGraph,
    count: Vec<u32>,
    xor: Vec<usize>,
    alive: Vec<bool>,
    stack: Vec<SlotId>,
    resolved: Vec<bool>,
    events: Vec<(SlotId, UserId)>,
}

impl<'g> FrameAnalyzer<'g> {
    pub fn new(graph: &'g FrameGraph) -> Self {
        let n = graph.slot_count();
        Self {
            graph,
            count: vec![0; n],
            xor: vec![0; n],
            alive: vec![false; n],
            stack: Vec::with_capacity(n),
            resolved: vec![false; graph.user_count()],
            events: Vec::new(),
        }
    }

    /// Peels the scratch state until no singleton is left or `target` is
    /// resolved. Returns whether `target` was resolved.
    fn run(&mut self, target: Option<UserId>, record: bool) -> bool {
        let sets = self.graph.all_slot_sets();
        while let Some(s) = self.stack.pop() {
            if self.count[s] != 1 {
                continue;
            }
            let u = self.xor[s];
            self.resolved[u] = true;
            if record {
                self.events.push((s, u));
            }
            for &t in &sets[u] {
                if self.alive[t] {
                    self.count[t] -= 1;
                    self.xor[t] ^= u;
                    if self.count[t] == 1 {
                        self.stack.push(t);
                    }
                }
            }
            if target == Some(u) {
                return true;
            }
        }
        false
    }

    fn seed_stack(&mut self) {
        self.stack.clear();
        for s in 0..self.count.len() {
            if self.alive[s] && self.count[s] == 1 {
                self.stack.push(s);
            }
        }
    }

    /// Decodes the view of `receiver` (broadcast) or of a base station.
    fn decode(&mut self, receiver: Option<UserId>) -> ReceiverDecode {
        let g = self.graph;
        self.alive.fill(true);
        if let Some(r) = receiver {
            for &s in g.slots_of(r) {
                self.alive[s] = false;
            }
        }
        for s in 0..g.slot_count() {
            if self.alive[s] {
                let occ = g.users_in(s);
                self.count[s] = occ.len() as u32;
                self.xor[s] = occ.iter().fold(0, |x, u| x ^ u);
            } else {
                self.count[s] = 0;
                self.xor[s] = 0;
            }
        }
        self.resolved.fill(false);
        self.events.clear();
        self.seed_stack();
        self.run(None, true);
        let mut resolved = UserSet::new(g.user_count());
        for (u, r) in self.resolved.iter().enumerate() {
            if *r {
                resolved.insert(u);
            }
        }
        let residual = (0..g.slot_count())
            .map(|s| self.alive[s] && self.count[s] > 0)
            .collect();
        ReceiverDecode {
            resolved,
            residual,
            events: std::mem::take(&mut self.events),
        }
    }

    /// Decodes the frame at a unicast receiver and tallies per-degree loss.
    pub fn unicast_counts(&mut self) -> FrameCounts {
        let decode = self.decode(None);
        let mut counts = FrameCounts::default();
        for u in 0..self.graph.user_count() {
            counts.observe(0, self.graph.degree(u), decode.resolved.contains(u));
        }
        counts
    }

    /// Per-degree loss for every broadcast receiver, without the handshake.
    pub fn broadcast_counts(&mut self, receivers: Option<&[UserId]>) -> FrameCounts {
        self.collect(None, receivers)
    }

    /// Full handshake statistics. `receivers` restricts the receiving side of
    /// the ordered pairs; `None` means every user.
    pub fn handshake_counts(&mut self, mode: HandshakeMode, receivers: Option<&[UserId]>) -> FrameCounts {
        self.collect(Some(mode), receivers)
    }

    fn collect(&mut self, mode: Option<HandshakeMode>, receivers: Option<&[UserId]>) -> FrameCounts {
        let g = self.graph;
        let m = g.user_count();
        let decodes: Vec<ReceiverDecode> = (0..m).map(|u| self.decode(Some(u))).collect();
        let all: Vec<UserId>;
        let receivers = match receivers {
            Some(r) => r,
            None => {
                all = (0..m).collect();
                &all
            }
        };

        let mut counts = FrameCounts::default();
        let mut own = vec![false; g.slot_count()];
        let mut base_count = vec![0u32; g.slot_count()];
        let mut base_xor = vec![0usize; g.slot_count()];
        let mut deps = Dependencies::new(m, g.slot_count());
        for &a in receivers {
            let da = &decodes[a];
            for &s in g.slots_of(a) {
                own[s] = true;
            }
            let k = g.degree(a);
            let mut have_base = false;
            for b in (0..m).filter(|b| *b != a) {
                let d = g.slots_of(b).iter().filter(|s| !own[**s]).count();
                let ab = da.resolved.contains(b);
                counts.observe(k, d, ab);
                let Some(mode) = mode else { continue };
                let ba = decodes[b].resolved.contains(a);
                let class = if !ab {
                    classify(false, None, ba)
                } else if ba && mode == HandshakeMode::Fast {
                    classify(true, Some(true), true)
                } else {
                    if !have_base {
                        self.reconstruction_base(a, da, &mut base_count, &mut base_xor);
                        deps.build(g, &da.events);
                        have_base = true;
                    }
                    counts.evaluated += 1;
                    let predicts = self.predict(a, b, da, &deps, &base_count, &base_xor);
                    classify(true, Some(predicts), ba)
                }
                .expect("consistent handshake vector");
                counts.add(class.counter(), 1);
            }
            for &s in g.slots_of(a) {
                own[s] = false;
            }
        }
        counts
    }

    /// Slot counters of the reconstruction of receiver `a`: every
    /// non-residual slot, holding `a` and the users `a` resolved.
    fn reconstruction_base(&self, a: UserId, da: &ReceiverDecode, count: &mut [u32], xor: &mut [usize]) {
        count.fill(0);
        xor.fill(0);
        for u in da.resolved.iter().chain(std::iter::once(a)) {
            for &s in self.graph.slots_of(u) {
                if !da.residual[s] {
                    count[s] += 1;
                    xor[s] ^= u;
                }
            }
        }
    }

    /// `A_B(A)` on the reconstruction of `a` with `b`'s slots removed.
    fn predict(
        &mut self,
        a: UserId,
        b: UserId,
        da: &ReceiverDecode,
        deps: &Dependencies,
        count: &[u32],
        xor: &[usize],
    ) -> bool {
        let g = self.graph;
        let b_slots = g.slots_of(b);
        // `a` is freed by one of its slots outside `b`'s once every peer in
        // that slot is resolved, and while `a` is unresolved its slots free
        // nobody else. A peer whose dependency closure avoids `b` is resolved
        // for sure, so such slots settle the question without peeling.
        for &s in g.slots_of(a) {
            if b_slots.contains(&s) {
                continue;
            }
            if count[s] == 1
                || g
                    .users_in(s)
                    .iter()
                    .all(|p| *p == a || (da.resolved.contains(*p) && deps.survives(*p, b, b_slots)))
            {
                return true;
            }
        }
        self.count.copy_from_slice(count);
        self.xor.copy_from_slice(xor);
        for s in 0..g.slot_count() {
            self.alive[s] = !da.residual[s];
        }
        for &s in b_slots {
            self.alive[s] = false;
            self.count[s] = 0;
        }
        self.resolved.fill(false);
        self.seed_stack();
        self.run(Some(a), false)
    }
}

/// Reference handshake classification built only from the explicit views.
/// It is slow and meant for cross-checking the frame analyzer.
pub fn classify_pairs_explicit(graph: &FrameGraph) -> Result<Vec<((UserId, UserId), OutcomeClass)>> {
    let m = graph.user_count();
    let outcomes: Vec<DecodeOutcome> = (0..m)
        .map(|u| induced_view(graph, u, ReceiverMode::Broadcast).map(|v| peel(&v)))
        .collect::<Result<_>>()?;
    let mut classes = Vec::with_capacity(m * m.saturating_sub(1));
    for a in 0..m {
        let recon = reconstruct(graph, a, &outcomes[a])?;
        for b in (0..m).filter(|b| *b != a) {
            let ab = outcomes[a].is_resolved(b);
            let ba = outcomes[b].is_resolved(a);
            let predicts = if ab { Some(evaluate_peer(&recon, b)?) } else { None };
            classes.push(((a, b), classify(ab, predicts, ba)?));
        }
    }
    Ok(classes)
}
