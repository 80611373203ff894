//! Seeded random rational points for probabilistic checks.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::symexpr::Q;

/// Deterministic generator of rational sample points.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// A rational in roughly `[-3, 3]` with small denominator.
    pub fn rational(&mut self) -> Q {
        let den: i64 = self.rng.random_range(1..=7);
        let num: i64 = self.rng.random_range(-3 * den..=3 * den);
        Q::new(BigInt::from(num), BigInt::from(den))
    }

    pub fn point(&mut self, dim: usize) -> Vec<Q> {
        (0..dim).map(|_| self.rational()).collect()
    }

    pub fn points(&mut self, dim: usize, count: usize) -> Vec<Vec<Q>> {
        (0..count).map(|_| self.point(dim)).collect()
    }

    pub fn int(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.random_range(lo..=hi)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
