//! Deterministic seed derivation.
//!
//! Every stream used by the simulators is a `ChaCha8Rng` seeded from a base
//! seed mixed with a stream index, so results do not depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    seed ^ splitmix64(index)
}

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
}

/// Two-level derivation, e.g. realization then particle chunk.
pub fn substream(seed: u64, outer: u64, inner: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(seed, outer), inner.wrapping_add(1 << 40)))
}
