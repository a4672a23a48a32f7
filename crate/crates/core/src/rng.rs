//! Deterministic stream splitting.
//!
//! Every source of randomness in the engine is a ChaCha12 stream derived from
//! a root seed and an integer path, so any piece of work can be handed its own
//! independent stream regardless of execution order or parallelism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// The pinned RNG used throughout the engine.
pub type StreamRng = ChaCha12Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; full-avalanche 64-bit mixer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream from a root seed and a path of indices.
///
/// Distinct `(seed, path)` pairs yield streams that are independent for all
/// practical purposes; the same pair always yields the same stream.
pub fn stream_rng(seed: u64, path: &[u64]) -> StreamRng {
    let mut h = mix64(seed ^ GOLDEN);
    for (i, &p) in path.iter().enumerate() {
        h = mix64(h ^ mix64(p.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1))));
    }
    let mut bytes = [0u8; 32];
    let mut s = h;
    for chunk in bytes.chunks_exact_mut(8) {
        s = s.wrapping_add(GOLDEN);
        chunk.copy_from_slice(&mix64(s).to_le_bytes());
    }
    StreamRng::from_seed(bytes)
}

/// Splits a child stream off a parent by drawing a fresh 256-bit seed.
pub fn child_rng<R: Rng>(rng: &mut R) -> StreamRng {
    let mut bytes = [0u8; 32];
    rng.fill_bytes(&mut bytes);
    StreamRng::from_seed(bytes)
}
