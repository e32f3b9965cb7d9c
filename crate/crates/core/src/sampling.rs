//! Seeded random streams shared by the sampling-based routines.
//!
//! Every stream is a SplitMix64 generator (Steele, Lea and Flood 2014):
//! the state advances by the golden-ratio increment `0x9E3779B97F4A7C15` and
//! each output is mixed with multipliers `0xBF58476D1CE4E5B9` and
//! `0x94D049BB133111EB`. The seed is used as the initial state verbatim.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
pub use rand_xoshiro::SplitMix64;

pub fn rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Uniform draw on `[-1, 1)` from the top 53 bits of one output.
pub fn uniform_pm1(rng: &mut SplitMix64) -> f64 {
    let u = (rng.gen::<u64>() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

/// `n` Latin-hypercube points inside the box `bounds`.
pub fn latin_hypercube(n: usize, bounds: &[(f64, f64)], rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; bounds.len()]; n];
    for (d, &(lo, hi)) in bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (k, point) in points.iter_mut().enumerate() {
            let u: f64 = rng.gen();
            point[d] = lo + (strata[k] as f64 + u) / n as f64 * (hi - lo);
        }
    }
    points
}
