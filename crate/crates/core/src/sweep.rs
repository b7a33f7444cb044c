//! Monte Carlo sweeps over channel load.
//!
//! Frame `f` of load point `i` draws all of its randomness from a ChaCha
//! stream keyed by the master seed with stream id `(i << 40) | f`, so any
//! frame can be replayed on its own and the output does not depend on how
//! frames are spread over worker threads.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{estimate, EstimateReport};
use crate::distribution::DegreeDistribution;
use crate::error::{Error, Result};
use crate::graph::{generate_frame, ReceiverMode, UserId};
use crate::handshake::{FrameAnalyzer, HandshakeMode};
use crate::tally::{FrameCounts, HandshakeTally};

pub const CSV_HEADER: &str = "load,users,frames,pairs,c1,c2,c3,c4,c5,impossible,p1,p2,p3,p4,p5,plr,plr_se,detect_ratio,bound_tight,conj_ratio";

const FRAME_BITS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandshakeSetting {
    Fast,
    Verify,
    Off,
}

impl HandshakeSetting {
    fn mode(self) -> Option<HandshakeMode> {
        match self {
            HandshakeSetting::Fast => Some(HandshakeMode::Fast),
            HandshakeSetting::Verify => Some(HandshakeMode::Verify),
            HandshakeSetting::Off => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelection {
    /// Every ordered pair of distinct users.
    All,
    /// Pairs whose receiver is one of `K` reference users drawn per frame.
    Reference(usize),
}

/// Load points of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadPoints {
    /// Channel loads `g`; the user count is `round(g n)`, halves rounded up.
    Loads(Vec<f64>),
    /// Explicit user counts.
    Users(Vec<usize>),
}

/// Parses `START:STEP:STOP` into an inclusive list of loads.
pub fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Config(format!("sweep '{text}' is not START:STEP:STOP"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, step, stop) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0 && start.is_finite() && stop.is_finite() && stop >= start) {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub slots: usize,
    pub points: LoadPoints,
    pub dist: DegreeDistribution,
    pub frames: u64,
    pub seed: u64,
    pub mode: ReceiverMode,
    /// Ignored in unicast mode, where there is no handshake.
    pub handshake: HandshakeSetting,
    pub pairs: PairSelection,
    pub per_degree: bool,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl SweepConfig {
    pub fn new(slots: usize, points: LoadPoints, dist: DegreeDistribution) -> Self {
        Self {
            slots,
            points,
            dist,
            frames: 1000,
            seed: 0,
            mode: ReceiverMode::Broadcast,
            handshake: HandshakeSetting::Fast,
            pairs: PairSelection::All,
            per_degree: false,
            threads: None,
        }
    }

    fn handshake_enabled(&self) -> bool {
        self.mode == ReceiverMode::Broadcast && self.handshake != HandshakeSetting::Off
    }

    /// `(load, users)` of every point, ascending in load.
    pub fn resolved_points(&self) -> Vec<(f64, usize)> {
        let n = self.slots as f64;
        let mut points: Vec<(f64, usize)> = match &self.points {
            LoadPoints::Loads(loads) => loads
                .iter()
                .map(|g| (*g, (g * n + 0.5).floor() as usize))
                .collect(),
            LoadPoints::Users(users) => users.iter().map(|m| (*m as f64 / n, *m)).collect(),
        };
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        points
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots == 0 {
            return Err(Error::Config("--slots must be positive".into()));
        }
        if self.slots < self.dist.max_degree() {
            return Err(Error::Config(format!(
                "{} slots cannot hold a degree-{} user",
                self.slots,
                self.dist.max_degree()
            )));
        }
        if self.frames == 0 {
            return Err(Error::Config("--frames must be at least 1".into()));
        }
        if self.frames >= 1 << FRAME_BITS {
            return Err(Error::Config("too many frames per load point".into()));
        }
        match &self.points {
            LoadPoints::Loads(loads) => {
                if loads.is_empty() {
                    return Err(Error::Config("no load points".into()));
                }
                if let Some(g) = loads.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
                    return Err(Error::Config(format!("load {g} must be positive")));
                }
            }
            LoadPoints::Users(users) => {
                if users.is_empty() {
                    return Err(Error::Config("no load points".into()));
                }
            }
        }
        for (load, users) in self.resolved_points() {
            if self.handshake_enabled() && users < 2 {
                return Err(Error::Config(format!(
                    "load {load} gives {users} users, the handshake needs at least 2"
                )));
            }
            if let PairSelection::Reference(k) = self.pairs {
                if k == 0 || k > users {
                    return Err(Error::Config(format!(
                        "cannot draw {k} reference users out of {users}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Randomness of frame `frame` at load point `load_index`.
pub fn frame_rng(seed: u64, load_index: usize, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((load_index as u64) << FRAME_BITS) | frame);
    rng
}

/// Simulates one frame with `users` users.
pub fn simulate_frame(config: &SweepConfig, users: usize, rng: &mut ChaCha8Rng) -> FrameCounts {
    let graph = generate_frame(users, config.slots, &config.dist, rng).expect("validated configuration");
    let reference: Option<Vec<UserId>> = match config.pairs {
        PairSelection::All => None,
        PairSelection::Reference(k) => {
            let mut r = rand::seq::index::sample(rng, users, k).into_vec();
            r.sort_unstable();
            Some(r)
        }
    };
    let mut analyzer = FrameAnalyzer::new(&graph);
    match (config.mode, config.handshake.mode()) {
        (ReceiverMode::Unicast, _) => analyzer.unicast_counts(),
        (ReceiverMode::Broadcast, None) => analyzer.broadcast_counts(reference.as_deref()),
        (ReceiverMode::Broadcast, Some(mode)) => analyzer.handshake_counts(mode, reference.as_deref()),
    }
}

/// Tally of all frames of one load point.
pub fn run_point(config: &SweepConfig, load_index: usize, users: usize) -> HandshakeTally {
    let empty = || HandshakeTally::for_config(config.slots, config.mode, Some(config.dist.clone()));
    let work = || {
        (0..config.frames)
            .into_par_iter()
            .fold(empty, |mut tally, frame| {
                let mut rng = frame_rng(config.seed, load_index, frame);
                tally.record_frame(&simulate_frame(config, users, &mut rng));
                tally
            })
            .reduce(empty, |a, b| a.merge(&b).expect("tallies share one configuration"))
    };
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .expect("thread pool")
            .install(work),
        None => work(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub load: f64,
    pub users: usize,
    pub tally: HandshakeTally,
    pub report: EstimateReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub points: Vec<PointResult>,
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut points = Vec::new();
    for (index, (load, users)) in config.resolved_points().into_iter().enumerate() {
        let tally = run_point(config, index, users);
        if config.handshake == HandshakeSetting::Verify && tally.impossible_count() > 0 {
            return Err(Error::TheoremViolation {
                load_index: index,
                count: tally.impossible_count(),
            });
        }
        let report = estimate(&tally)?;
        points.push(PointResult {
            load,
            users,
            tally,
            report,
        });
    }
    Ok(SweepResult {
        config: config.clone(),
        points,
    })
}

/// Formats with 6 significant digits in positional notation.
pub fn format_probability(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = |exp: i32| (5 - exp).max(0) as usize;
    let mut exp = x.abs().log10().floor() as i32;
    let mut s = format!("{:.*}", digits(exp), x);
    // Rounding may carry into a new leading digit (9.999996 -> 10.00000).
    let rounded: f64 = s.parse().unwrap_or(x);
    if rounded != 0.0 && rounded.abs().log10().floor() as i32 > exp {
        exp += 1;
        s = format!("{:.*}", digits(exp), x);
    }
    s
}

impl SweepResult {
    /// `(receiver degree, peer degree)` columns added by `--per-degree`.
    pub fn per_degree_columns(&self) -> Vec<(usize, usize)> {
        let q = self.config.dist.max_degree();
        let receivers: Vec<usize> = match self.config.mode {
            ReceiverMode::Unicast => vec![0],
            ReceiverMode::Broadcast => self.config.dist.support().collect(),
        };
        receivers
            .into_iter()
            .flat_map(|k| (0..=q).map(move |d| (k, d)))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let columns = if self.config.per_degree {
            self.per_degree_columns()
        } else {
            Vec::new()
        };
        let mut out = String::from(CSV_HEADER);
        for (k, d) in &columns {
            let _ = write!(out, ",plr_k{k}_d{d}");
        }
        out.push('\n');
        for p in &self.points {
            let t = &p.tally;
            let r = &p.report;
            let c = t.totals();
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                format_probability(p.load),
                p.users,
                t.frames(),
                t.pair_total(),
                c[0],
                c[1],
                c[2],
                c[3],
                c[4],
                t.impossible_count()
            );
            let values = [
                r.p[0].value,
                r.p[1].value,
                r.p[2].value,
                r.p[3].value,
                r.p[4].value,
                r.plr.value,
                r.plr.se,
                r.detect_ratio.value,
                r.bound_tight,
                r.conj_ratio.value,
            ];
            for v in values {
                out.push(',');
                out.push_str(&format_probability(v));
            }
            for cell in &columns {
                let v = r.per_degree_plr.get(cell).map(|e| e.value).unwrap_or(f64::NAN);
                out.push(',');
                out.push_str(&format_probability(v));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let loads = parse_sweep("0.1:0.1:0.9").unwrap();
        assert_eq!(loads.len(), 9);
        assert!((loads[8] - 0.9).abs() < 1e-12);
        assert_eq!(parse_sweep("0.5:0.1:0.5").unwrap(), vec![0.5]);
        assert!(parse_sweep("0.5:0:1").is_err());
        assert!(parse_sweep("1:0.1:0.5").is_err());
        assert!(parse_sweep("0.1:0.2").is_err());
    }

    #[test]
    fn user_rounding_is_half_up() {
        let d = DegreeDistribution::degenerate(1);
        let c = SweepConfig::new(10, LoadPoints::Loads(vec![0.25, 0.35, 0.14]), d);
        let users: Vec<usize> = c.resolved_points().iter().map(|p| p.1).collect();
        assert_eq!(users, vec![1, 3, 4]);
    }

    #[test]
    fn probability_format() {
        assert_eq!(format_probability(0.25), "0.250000");
        assert_eq!(format_probability(0.000123456789), "0.000123457");
        assert_eq!(format_probability(1.0), "1.00000");
        assert_eq!(format_probability(9.9999996), "10.0000");
        assert_eq!(format_probability(0.0), "0");
        assert_eq!(format_probability(f64::NAN), "NaN");
        assert_eq!(format_probability(123456.7), "123457");
    }

    #[test]
    fn validation() {
        let d = DegreeDistribution::degenerate(3);
        let mut c = SweepConfig::new(10, LoadPoints::Loads(vec![0.5]), d.clone());
        assert!(c.validate().is_ok());
        c.frames = 0;
        assert!(c.validate().is_err());
        let c = SweepConfig::new(2, LoadPoints::Loads(vec![0.5]), d.clone());
        assert!(c.validate().is_err());
        let c = SweepConfig::new(10, LoadPoints::Loads(vec![0.1]), d.clone());
        assert!(c.validate().is_err(), "one user cannot shake hands");
        let c = SweepConfig::new(10, LoadPoints::Loads(vec![-0.1]), d.clone());
        assert!(c.validate().is_err());
        let c = SweepConfig::new(10, LoadPoints::Loads(vec![]), d.clone());
        assert!(c.validate().is_err());
        let mut c = SweepConfig::new(10, LoadPoints::Users(vec![4]), d);
        c.pairs = PairSelection::Reference(5);
        assert!(c.validate().is_err());
    }

    #[test]
    fn streams_are_distinct() {
        use rand::RngCore;
        let a = frame_rng(1, 0, 0).next_u64();
        let b = frame_rng(1, 0, 1).next_u64();
        let c = frame_rng(1, 1, 0).next_u64();
        assert!(a != b && a != c && b != c);
        assert_eq!(frame_rng(1, 1, 0).next_u64(), c);
    }
}
