//! Scalar abstraction and the deterministic RNG used throughout the crate.
//!
//! The numeric kernels (series descriptors, tree fitting, metrics) are
//! generic over [`Real`] so they work with `f32` or `f64`; the pipeline
//! itself runs on `f64` via the aliases at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossless conversion from a sample count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// One mixing step of the splitmix64 sequence, as a pure function.
///
/// Used to derive independent per-tree and per-stream seeds from a master
/// seed; the same constants on any platform or language produce the same
/// values, which is what makes golden files portable.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic splitmix64 generator.
///
/// All randomness in training and data generation flows through this type;
/// no ambient or thread-local RNG state is ever consulted.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `[0, bound)`. `bound` must be nonzero.
    ///
    /// Plain modulo reduction: the tiny bias is irrelevant here and the
    /// result is reproducible without platform-dependent rejection loops.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.next_u64() % bound
    }

    /// Uniform `f64` in `[0, 1)` built from the top 53 bits.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller on two uniform draws.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_unit().max(f64::MIN_POSITIVE);
        let u2 = self.next_unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// First `take` elements of a Fisher-Yates shuffle of `0..n`,
    /// i.e. a sample without replacement, returned in draw order.
    pub fn sample_indices(&mut self, n: usize, take: usize) -> Vec<usize> {
        debug_assert!(take <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..take {
            let j = i + self.next_below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(take);
        pool
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // First three outputs of the splitmix64 sequence seeded with 0,
        // cross-checked against the published reference implementation.
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn pure_step_matches_generator() {
        let mut rng = SplitMix64::new(42);
        assert_eq!(splitmix64(42), rng.next_u64());
    }

    #[test]
    fn unit_draws_stay_in_range() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..1000 {
            let u = rng.next_unit();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn sample_without_replacement_is_a_permutation_prefix() {
        let mut rng = SplitMix64::new(3);
        let sample = rng.sample_indices(10, 4);
        assert_eq!(sample.len(), 4);
        let mut sorted = sample.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 4);
        assert!(sorted.iter().all(|&i| i < 10));
    }
}
