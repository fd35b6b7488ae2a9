//! Seeded, splittable random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream keyed by
//! a 64-bit seed and selected by a 64-bit stream id, so output depends only on
//! `(seed, stream)` and never on evaluation order or thread scheduling.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Identifier of the generator construction, folded into matrix fingerprints.
pub const GENERATOR_ID: &str = "chacha8/splitmix64-key/v1";

/// Domain tags, kept distinct so unrelated draws never share a stream.
pub mod domain {
    pub const MATRIX: u32 = 0x4d41_5452;
    pub const SIGNAL: u32 = 0x5349_474e;
    pub const SUPPORT_SAMPLING: u32 = 0x5355_5050;
    pub const RESTART: u32 = 0x5245_5354;
    pub const TRIAL: u32 = 0x5452_4941;
    pub const POINTS: u32 = 0x504f_494e;
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and an ordered list of labels.
pub fn derive_seed(parent: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(parent), |acc, &l| splitmix64(acc ^ splitmix64(l.wrapping_add(0x632b_e59b_d9b4_e019))))
}

/// Opens stream `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: u32, index: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((domain as u64) << 32) | index as u64);
    rng
}
