//! Reproducible random streams.
//!
//! Every random draw in a run descends from a single 64-bit seed. Streams are
//! keyed by a path of integers (stage, level, particle index, ...) so that the
//! result of a particle loop does not depend on how it is scheduled across
//! worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream handed to models and samplers.
pub type SimRng = ChaCha8Rng;

/// Stream-path tags used by the samplers.
pub mod tag {
    pub const PRIOR: u64 = 1;
    pub const EXACT: u64 = 2;
    pub const APPROX: u64 = 3;
    pub const RESAMPLE: u64 = 4;
    pub const PRECONDITION: u64 = 5;
    pub const DATA: u64 = 6;
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream for `seed` along the given tag path.
pub fn stream(seed: u64, path: &[u64]) -> SimRng {
    let mut state = seed;
    let mut h = splitmix64(&mut state);
    for &t in path {
        state ^= t.wrapping_mul(0xD6E8_FEB8_6659_FD93).rotate_left(17) ^ h;
        h = splitmix64(&mut state);
    }
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    SimRng::from_seed(bytes)
}

/// Draws a fresh 64-bit child seed from a stream; used where a component needs
/// its own seed rather than a stream (e.g. nested sampler runs).
pub fn child_seed(rng: &mut impl rand::Rng) -> u64 {
    rng.random()
}
