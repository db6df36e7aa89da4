//! Deterministic stream derivation.
//!
//! Every random draw in the simulator comes from a ChaCha stream whose seed is
//! derived from the experiment master seed plus a path of integer tags
//! (trial index, user index, link id, ...). Streams for distinct paths are
//! statistically independent, and a stream's output depends only on the
//! master seed and its path, never on how many draws other streams consumed.
//! This is what keeps parallel trial execution bit-identical to sequential.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tag for a channel draw stream: direct user-AP link.
pub const LINK_DIRECT: u64 = 1;
/// Tag for a channel draw stream: user-RIS link.
pub const LINK_USER_RIS: u64 = 2;
/// Tag for the shared RIS-AP link.
pub const LINK_RIS_AP: u64 = 3;
/// Tag for per-trial user placement.
pub const LINK_PLACEMENT: u64 = 4;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive an independent ChaCha stream from `seed` and a tag path.
///
/// The same `(seed, path)` always yields the same stream.
pub fn derive_stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ 0x6a09e667f3bcc908;
    let mut acc = splitmix64(&mut state);
    for &tag in path {
        state ^= tag.wrapping_mul(0x9e3779b97f4a7c15);
        acc ^= splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    let mut s = acc;
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Derive a child seed (for nesting trial -> per-trial streams).
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut state = seed ^ 0xbb67ae8584caa73b;
    let mut acc = splitmix64(&mut state);
    for &tag in path {
        state ^= tag.wrapping_mul(0x9e3779b97f4a7c15);
        acc ^= splitmix64(&mut state);
    }
    acc
}
