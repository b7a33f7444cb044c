//! Closed-form induced distribution and estimators built on tallies.

use std::collections::BTreeMap;

use crate::distribution::DegreeDistribution;
use crate::error::{Error, Result};
use crate::tally::{Counter, HandshakeTally, COUNTERS};

pub use crate::tally::{DegreeCell, FrameCounts, TallyKey};

/// `ln C(n, k)` as a sum of logarithms of exact ratios.
///
/// The lower index is at most the maximum degree in every use here, so the
/// loop is short and the result is accurate to a few ulps.
pub(crate) fn ln_choose(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k)
        .map(|i| ((n - k + i) as f64 / i as f64).ln())
        .sum()
}

/// Degree distribution of the peers as observed by a degree-`k` receiver.
///
/// A degree-`l` peer whose `l` slots are uniform over the `n` slots keeps
/// `d` of them outside the receiver's `k` slots with hypergeometric
/// probability `C(n-k, d) C(k, l-d) / C(n, l)`.
pub fn induced_distribution(
    dist: &DegreeDistribution,
    slots: usize,
    receiver_degree: usize,
) -> Result<DegreeDistribution> {
    let q = dist.max_degree();
    let (n, k) = (slots, receiver_degree);
    if k > n {
        return Err(Error::Domain(format!("receiver degree {k} exceeds {n} slots")));
    }
    if n < q {
        return Err(Error::Domain(format!("{n} slots cannot hold a degree-{q} user")));
    }
    let mut probs = vec![0.0; q + 1];
    for (d, out) in probs.iter_mut().enumerate() {
        if d > n - k {
            continue;
        }
        for l in d..=q.min(k + d) {
            let lambda = dist.prob(l);
            if lambda == 0.0 {
                continue;
            }
            let ln_w = ln_choose(n - k, d) + ln_choose(k, l - d) - ln_choose(n, l);
            *out += ln_w.exp() * lambda;
        }
    }
    DegreeDistribution::new(probs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn new(value: f64, se: f64) -> Self {
        Self { value, se }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub frames: u64,
    pub pairs: u64,
    /// `p1..p5` in table order.
    pub p: [Estimate; 5],
    /// `p̄`: fraction of observations where the peer stayed unresolved.
    pub plr: Estimate,
    /// `p1 + p2 + p3`: fraction of pairs where the peer failed to resolve
    /// the receiver.
    pub peer_failure: Estimate,
    /// `p1 / (p1 + p2 + p3)`.
    pub detect_ratio: Estimate,
    pub sum12: Estimate,
    /// `p̄`, the loose bound on `p1 + p2`.
    pub bound_loose: f64,
    /// `p̄ (1 - p̄)`, the tight bound on `p1 + p2`.
    pub bound_tight: f64,
    /// `p3 / p̄²`.
    pub conj_ratio: Estimate,
    /// `p3 / p̄`, i.e. `Pr{G_B(A) = 0 | G_A(B) = 0}`.
    pub cond_prob: Estimate,
    /// `p1 + p2 - p̄`.
    pub loose_gap: Estimate,
    /// `p1 + p2 - p̄ (1 - p̄)`.
    pub tight_gap: Estimate,
    /// `p3 - p̄²`.
    pub conj_gap: Estimate,
    /// `p3 / p̄ - p̄`.
    pub cond_gap: Estimate,
    /// `(receiver degree, observed peer degree)` → PLR.
    pub per_degree_plr: BTreeMap<(usize, usize), Estimate>,
}

/// Delta-method estimate of `f` at the per-frame counter means.
fn delta(tally: &HandshakeTally, f: impl Fn(&[f64; COUNTERS]) -> f64) -> Estimate {
    let frames = tally.frames() as f64;
    let mut mean = [0.0; COUNTERS];
    for (m, t) in mean.iter_mut().zip(tally.totals()) {
        *m = *t as f64 / frames;
    }
    let value = f(&mean);
    if !value.is_finite() || tally.frames() < 2 {
        return Estimate::new(value, f64::NAN);
    }
    let mut grad = [0.0; COUNTERS];
    for i in 0..COUNTERS {
        let h = 1e-6 * mean[i].abs().max(1e-300);
        let mut up = mean;
        let mut down = mean;
        up[i] += h;
        down[i] -= h;
        grad[i] = (f(&up) - f(&down)) / (2.0 * h);
        if !grad[i].is_finite() {
            grad[i] = 0.0;
        }
    }
    const ALL: [Counter; COUNTERS] = [
        Counter::FailureDetected,
        Counter::FalseHandshake,
        Counter::AuxiliaryBothFail,
        Counter::AuxiliaryPeerOk,
        Counter::Successful,
        Counter::Impossible,
        Counter::Unresolved,
        Counter::Observed,
    ];
    let mut var = 0.0;
    for i in 0..COUNTERS {
        for j in 0..COUNTERS {
            if grad[i] != 0.0 && grad[j] != 0.0 {
                var += grad[i] * grad[j] * tally.covariance(ALL[i], ALL[j]);
            }
        }
    }
    Estimate::new(value, (var.max(0.0) / frames).sqrt())
}

const C1: usize = Counter::FailureDetected as usize;
const C2: usize = Counter::FalseHandshake as usize;
const C3: usize = Counter::AuxiliaryBothFail as usize;
const UNRESOLVED: usize = Counter::Unresolved as usize;
const OBSERVED: usize = Counter::Observed as usize;

fn plr_of(m: &[f64; COUNTERS]) -> f64 {
    m[UNRESOLVED] / m[OBSERVED]
}

/// Probabilities, error bars and derived ratios of a tally.
///
/// Error bars come from the spread of per-frame counts. Outcome
/// probabilities are `NaN` when the tally holds no handshake outcomes.
pub fn estimate(tally: &HandshakeTally) -> Result<EstimateReport> {
    if tally.pair_total() == 0 {
        return Err(Error::EmptyReport);
    }
    let classified = tally.classified_total() > 0;
    let mut p = [Estimate::exact(f64::NAN); 5];
    for (i, slot) in p.iter_mut().enumerate() {
        if classified {
            *slot = delta(tally, |m| m[i] / m[OBSERVED]);
        }
    }
    let nan = Estimate::exact(f64::NAN);
    let plr = delta(tally, plr_of);
    let hs = |f: &dyn Fn(&[f64; COUNTERS]) -> f64| if classified { delta(tally, f) } else { nan };

    let peer_failure = hs(&|m| (m[C1] + m[C2] + m[C3]) / m[OBSERVED]);
    let detect_ratio = hs(&|m| m[C1] / (m[C1] + m[C2] + m[C3]));
    let sum12 = hs(&|m| (m[C1] + m[C2]) / m[OBSERVED]);
    let conj_ratio = hs(&|m| m[C3] / m[OBSERVED] / plr_of(m).powi(2));
    let cond_prob = hs(&|m| m[C3] / m[OBSERVED] / plr_of(m));
    let loose_gap = hs(&|m| (m[C1] + m[C2]) / m[OBSERVED] - plr_of(m));
    let tight_gap = hs(&|m| {
        let pb = plr_of(m);
        (m[C1] + m[C2]) / m[OBSERVED] - pb * (1.0 - pb)
    });
    let conj_gap = hs(&|m| m[C3] / m[OBSERVED] - plr_of(m).powi(2));
    let cond_gap = hs(&|m| m[C3] / m[OBSERVED] / plr_of(m) - plr_of(m));

    let per_degree_plr = tally
        .per_degree()
        .iter()
        .filter(|(_, cell)| cell.observed > 0)
        .map(|(&(k, d), cell)| {
            let est = if d == 0 {
                Estimate::exact(1.0)
            } else {
                let (r, se) = cell.ratio(tally.frames());
                Estimate::new(r, se)
            };
            ((k, d), est)
        })
        .collect();

    Ok(EstimateReport {
        frames: tally.frames(),
        pairs: tally.pair_total(),
        p,
        plr,
        peer_failure,
        detect_ratio,
        sum12,
        bound_loose: plr.value,
        bound_tight: plr.value * (1.0 - plr.value),
        conj_ratio,
        cond_prob,
        loose_gap,
        tight_gap,
        conj_gap,
        cond_gap,
        per_degree_plr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
    Approx,
}

/// One comparison `lhs (relation) rhs` with its error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`.
    pub gap: f64,
    pub se: f64,
    pub z: f64,
    /// Set when `p̄ = 0`: every comparison holds trivially.
    pub vacuous: bool,
}

impl BoundCheck {
    fn new(relation: Relation, lhs: f64, rhs: f64, gap: Estimate, vacuous: bool) -> Self {
        let z = if vacuous || gap.value == 0.0 {
            0.0
        } else {
            gap.value / gap.se
        };
        Self {
            relation,
            lhs,
            rhs,
            gap: gap.value,
            se: gap.se,
            z,
            vacuous,
        }
    }

    /// Whether the point estimates satisfy the relation.
    pub fn holds(&self) -> bool {
        self.holds_within(0.0)
    }

    /// Whether the relation holds allowing `sigmas` standard errors of slack.
    pub fn holds_within(&self, sigmas: f64) -> bool {
        if self.vacuous {
            return true;
        }
        let slack = if sigmas == 0.0 { 0.0 } else { sigmas * self.se };
        match self.relation {
            Relation::AtMost => self.gap <= slack,
            Relation::AtLeast => self.gap >= -slack,
            Relation::Approx => self.gap.abs() <= slack,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundVerdict {
    /// `p1 + p2 ≤ p̄`.
    pub loose: BoundCheck,
    /// `p1 + p2 ≤ p̄ (1 - p̄)`.
    pub tight: BoundCheck,
    /// `p3 ≥ p̄²`.
    pub conjecture: BoundCheck,
    /// `Pr{G_B(A) = 0 | G_A(B) = 0} ≈ p̄`.
    pub independence: BoundCheck,
}

pub fn check_bounds(report: &EstimateReport) -> BoundVerdict {
    let pb = report.plr.value;
    let vacuous = pb == 0.0;
    let p3 = report.p[2].value;
    BoundVerdict {
        loose: BoundCheck::new(Relation::AtMost, report.sum12.value, pb, report.loose_gap, vacuous),
        tight: BoundCheck::new(
            Relation::AtMost,
            report.sum12.value,
            report.bound_tight,
            report.tight_gap,
            vacuous,
        ),
        conjecture: BoundCheck::new(Relation::AtLeast, p3, pb * pb, report.conj_gap, vacuous),
        independence: BoundCheck::new(
            Relation::Approx,
            report.cond_prob.value,
            pb,
            report.cond_gap,
            vacuous,
        ),
    }
}
