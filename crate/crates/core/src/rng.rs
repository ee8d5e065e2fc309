//! Counter-based random streams.
//!
//! Every unit of simulated work (a replication, a chunk of Monte Carlo
//! draws) gets its own ChaCha8 stream keyed by `(master_seed, index)`. The
//! keystream position is a pure function of the key and the counter, so a
//! replication produces the same numbers whether it runs first, last, or on
//! another thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// SplitMix64 finalizer, used to turn `(seed, tag)` pairs into fresh keys.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream `index` of the family keyed by `master_seed`.
pub fn stream(master_seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Derive an independent master seed for a named sub-purpose, so that for
/// example population generation and assignment draws never share a key.
pub fn derive_seed(master_seed: u64, tag: u64) -> u64 {
    mix64(master_seed ^ mix64(tag))
}
