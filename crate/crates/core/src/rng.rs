//! Counter-based seed derivation.
//!
//! Every random draw in a run is keyed by a path of integers (master seed,
//! drop index, block index, purpose, ...). Each path maps to an independent
//! ChaCha stream, so the draws never depend on scheduling or worker count.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Purpose tags used as the last path element.
pub mod purpose {
    pub const GEOMETRY: u64 = 0x6e01;
    pub const CHANNEL: u64 = 0x6e02;
    pub const UPLINK_NOISE: u64 = 0x6e03;
    pub const DOWNLINK_NOISE: u64 = 0x6e04;
    pub const SYNTHETIC: u64 = 0x6e05;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A node in the seed tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedTree(u64);

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        SeedTree(splitmix64(seed))
    }

    pub fn child(self, index: u64) -> Self {
        SeedTree(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0x1234_5678))))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let mut state = self.0;
        for chunk in seed.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

/// One draw from CN(0, 1).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// A length-`n` vector with i.i.d. CN(0, 1) entries.
pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| complex_normal(rng))
}
