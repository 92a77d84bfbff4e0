//! Deterministic stream derivation for parallel Monte-Carlo runs.
//!
//! Every random decision in a sweep draws from a stream keyed by
//! (master seed, point index, channel index, trial index, purpose tag).
//! Streams are derived by a splitmix-style hash chain, so results do not
//! depend on worker count or scheduling order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive an independent RNG stream from a master seed and a path of ids.
pub fn stream(master_seed: u64, ids: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix(master_seed);
    for &id in ids {
        state = splitmix(state ^ id.wrapping_mul(0xd1342543de82ef95));
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        state = splitmix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Standard circularly-symmetric complex Gaussian, unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let re: f64 = rng.sample(rand_distr::StandardNormal);
    let im: f64 = rng.sample(rand_distr::StandardNormal);
    num_complex::Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
