#![allow(dead_code)]

use bcsa_core::{generate_frame, DegreeDistribution, FrameGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random distribution over degrees `0..=q` with some coefficients zeroed.
pub fn random_dist(rng: &mut impl Rng, q: usize, allow_zero_degree: bool) -> DegreeDistribution {
    let mut w: Vec<f64> = (0..=q)
        .map(|l| {
            if (l == 0 && !allow_zero_degree) || rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(0.05..1.0)
            }
        })
        .collect();
    w[q] = rng.random_range(0.05..1.0);
    let total: f64 = w.iter().sum();
    DegreeDistribution::new(w.into_iter().map(|x| x / total).collect()).unwrap()
}

/// A random frame with `users` users of degrees up to `q` on `slots` slots.
pub fn random_frame(rng: &mut impl Rng, users: usize, slots: usize, q: usize) -> FrameGraph {
    let dist = random_dist(rng, q.min(slots), true);
    generate_frame(users, slots, &dist, rng).unwrap()
}
