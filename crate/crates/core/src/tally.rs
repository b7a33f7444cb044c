//! Mergeable frame statistics.
//!
//! Handshake outcomes of pairs in one frame are correlated because they share
//! the frame graph, so every counter is also kept as per-frame moments. Error
//! bars are then computed from the spread across frames. All sums are exact
//! integers: merging is associative and commutative, and a parallel reduction
//! gives bit-identical results to a sequential one.

use std::collections::BTreeMap;

use crate::distribution::DegreeDistribution;
use crate::error::{Error, Result};
use crate::graph::ReceiverMode;

/// Frame-level counters tracked with full second moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Counter {
    FailureDetected = 0,
    FalseHandshake = 1,
    AuxiliaryBothFail = 2,
    AuxiliaryPeerOk = 3,
    Successful = 4,
    Impossible = 5,
    /// (receiver, peer) observations where the peer stayed unresolved.
    Unresolved = 6,
    /// All (receiver, peer) observations.
    Observed = 7,
}

pub const COUNTERS: usize = 8;

/// Counts gathered from a single frame.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameCounts {
    pub counters: [u64; COUNTERS],
    /// Pairs for which the receiver ran the decoder on behalf of the peer.
    pub evaluated: u64,
    /// `(receiver degree, observed peer degree)` → (observed, unresolved).
    pub per_degree: BTreeMap<(usize, usize), (u64, u64)>,
}

impl FrameCounts {
    pub fn add(&mut self, counter: Counter, by: u64) {
        self.counters[counter as usize] += by;
    }

    pub fn observe(&mut self, receiver_degree: usize, peer_degree: usize, resolved: bool) {
        let cell = self
            .per_degree
            .entry((receiver_degree, peer_degree))
            .or_default();
        cell.0 += 1;
        self.counters[Counter::Observed as usize] += 1;
        if !resolved {
            cell.1 += 1;
            self.counters[Counter::Unresolved as usize] += 1;
        }
    }
}

/// Observed/unresolved totals of one (receiver degree, peer degree) cell,
/// with per-frame moments for the ratio's error bar.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DegreeCell {
    pub observed: u64,
    pub unresolved: u64,
    observed_sq: u128,
    unresolved_sq: u128,
    cross: u128,
}

impl DegreeCell {
    fn record(&mut self, observed: u64, unresolved: u64) {
        self.observed += observed;
        self.unresolved += unresolved;
        self.observed_sq += observed as u128 * observed as u128;
        self.unresolved_sq += unresolved as u128 * unresolved as u128;
        self.cross += observed as u128 * unresolved as u128;
    }

    fn merge(&mut self, other: &DegreeCell) {
        self.observed += other.observed;
        self.unresolved += other.unresolved;
        self.observed_sq += other.observed_sq;
        self.unresolved_sq += other.unresolved_sq;
        self.cross += other.cross;
    }

    /// `unresolved / observed` and its standard error over `frames` frames.
    pub fn ratio(&self, frames: u64) -> (f64, f64) {
        if self.observed == 0 {
            return (f64::NAN, f64::NAN);
        }
        let r = self.unresolved as f64 / self.observed as f64;
        if frames < 2 {
            return (r, f64::NAN);
        }
        let f = frames as f64;
        let mean_n = self.observed as f64 / f;
        let spread = self.unresolved_sq as f64 - 2.0 * r * self.cross as f64
            + r * r * self.observed_sq as f64;
        let var = spread.max(0.0) / (f * (f - 1.0) * mean_n * mean_n);
        (r, var.sqrt())
    }
}

/// Configuration a tally belongs to. Tallies only merge within one
/// configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TallyKey {
    pub slots: usize,
    pub mode: ReceiverMode,
    pub dist: Option<DegreeDistribution>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HandshakeTally {
    key: Option<TallyKey>,
    frames: u64,
    totals: [u64; COUNTERS],
    /// Upper triangle of `Σ_f X_f X_fᵀ`.
    products: [[u128; COUNTERS]; COUNTERS],
    evaluated: u64,
    per_degree: BTreeMap<(usize, usize), DegreeCell>,
}

impl HandshakeTally {
    /// The merge identity.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn for_config(slots: usize, mode: ReceiverMode, dist: Option<DegreeDistribution>) -> Self {
        Self {
            key: Some(TallyKey { slots, mode, dist }),
            ..Self::default()
        }
    }

    pub fn from_frame(key: TallyKey, counts: &FrameCounts) -> Self {
        let mut t = Self {
            key: Some(key),
            ..Self::default()
        };
        t.record_frame(counts);
        t
    }

    pub fn key(&self) -> Option<&TallyKey> {
        self.key.as_ref()
    }

    pub fn record_frame(&mut self, counts: &FrameCounts) {
        self.frames += 1;
        self.evaluated += counts.evaluated;
        for i in 0..COUNTERS {
            let xi = counts.counters[i];
            self.totals[i] += xi;
            for j in i..COUNTERS {
                self.products[i][j] += xi as u128 * counts.counters[j] as u128;
            }
        }
        for (&cell, &(observed, unresolved)) in &counts.per_degree {
            self.per_degree
                .entry(cell)
                .or_default()
                .record(observed, unresolved);
        }
    }

    /// Fieldwise sum. Fails if the two tallies come from different
    /// configurations.
    pub fn merge(mut self, other: &HandshakeTally) -> Result<Self> {
        self.merge_in(other)?;
        Ok(self)
    }

    pub fn merge_in(&mut self, other: &HandshakeTally) -> Result<()> {
        match (&mut self.key, &other.key) {
            (_, None) => {}
            (mine @ None, Some(theirs)) => *mine = Some(theirs.clone()),
            (Some(mine), Some(theirs)) => {
                if mine.slots != theirs.slots || mine.mode != theirs.mode {
                    return Err(Error::Contract(format!(
                        "cannot merge tallies of {:?}/{} slots and {:?}/{} slots",
                        mine.mode, mine.slots, theirs.mode, theirs.slots
                    )));
                }
                match (&mine.dist, &theirs.dist) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(Error::Contract(format!(
                            "cannot merge tallies of distributions {a} and {b}"
                        )))
                    }
                    (None, Some(b)) => mine.dist = Some(b.clone()),
                    _ => {}
                }
            }
        }
        self.frames += other.frames;
        self.evaluated += other.evaluated;
        for i in 0..COUNTERS {
            self.totals[i] += other.totals[i];
            for j in i..COUNTERS {
                self.products[i][j] += other.products[i][j];
            }
        }
        for (cell, value) in &other.per_degree {
            self.per_degree.entry(*cell).or_default().merge(value);
        }
        Ok(())
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn count(&self, counter: Counter) -> u64 {
        self.totals[counter as usize]
    }

    /// Number of (receiver, peer) observations. With the handshake enabled
    /// this is also the number of classified ordered pairs.
    pub fn pair_total(&self) -> u64 {
        self.count(Counter::Observed)
    }

    /// Sum of the five table outcome counters.
    pub fn classified_total(&self) -> u64 {
        self.totals[..5].iter().sum()
    }

    pub fn impossible_count(&self) -> u64 {
        self.count(Counter::Impossible)
    }

    pub fn evaluated_pairs(&self) -> u64 {
        self.evaluated
    }

    pub fn per_degree(&self) -> &BTreeMap<(usize, usize), DegreeCell> {
        &self.per_degree
    }

    pub fn totals(&self) -> &[u64; COUNTERS] {
        &self.totals
    }

    /// Sample covariance of the per-frame counters `i` and `j`.
    pub fn covariance(&self, i: Counter, j: Counter) -> f64 {
        let (i, j) = (i as usize, j as usize);
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let f = self.frames as i128;
        if f < 2 {
            return f64::NAN;
        }
        let num = f * self.products[lo][hi] as i128 - self.totals[lo] as i128 * self.totals[hi] as i128;
        num as f64 / (f * (f - 1)) as f64
    }
}
