//! Reproducible random streams.
//!
//! The generator is xoshiro256++ whose 256-bit state is expanded from the
//! 64-bit seed with SplitMix64 (increment `0x9E3779B97F4A7C15`, mix
//! multipliers `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`). Uniforms on
//! the open interval (0, 1) take the top 53 bits of each output:
//! `((x >> 11) + 0.5) · 2⁻⁵³`. Standard normals are the inverse normal CDF of
//! one such uniform, so each normal consumes exactly one 64-bit output.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::special::normal_quantile;

const TWO_POW_MINUS_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct SimRng(Xoshiro256PlusPlus);

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on (0, 1); never returns 0 or 1.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * TWO_POW_MINUS_53
    }

    pub fn standard_normal(&mut self) -> f64 {
        normal_quantile(self.uniform())
    }

    pub fn normal(&mut self, mean: f64, sigma: f64) -> f64 {
        mean + sigma * self.standard_normal()
    }

    /// Uniform on [lo, hi).
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Index in `0..n` by modulo reduction; `n` must be non-zero.
    pub fn index(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_stream() {
        // xoshiro256++ seeded by SplitMix64(0); first outputs pinned so any
        // change of algorithm or seeding is caught.
        let mut r = SimRng::new(0);
        let first: [u64; 3] = [r.next_u64(), r.next_u64(), r.next_u64()];
        let mut again = SimRng::new(0);
        assert_eq!(
            first,
            [again.next_u64(), again.next_u64(), again.next_u64()]
        );
        assert_eq!(first[0], 0x53175d61490b23df);
    }

    #[test]
    fn uniform_is_open() {
        let mut r = SimRng::new(42);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn normal_moments() {
        let mut r = SimRng::new(7);
        let n = 100_000;
        let xs: alloc::vec::Vec<f64> = (0..n).map(|_| r.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02);
        assert!((var - 1.0).abs() < 0.02);
    }
}
