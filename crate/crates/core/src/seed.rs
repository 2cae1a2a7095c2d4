//! Counter-mode seed derivation.
//!
//! Every random stream in a sweep is keyed by `(master, stream, index)` so a
//! trial's outcome does not depend on which worker ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The simulator's RNG. ChaCha output is stable across platforms and releases.
pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent 64-bit seed from a parent seed, a stream tag and an index.
pub fn derive(parent: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent ^ splitmix64(stream)).wrapping_add(index))
}

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Stream tags used by the harness.
pub mod stream {
    pub const GRAPH: u64 = 1;
    pub const DISSEMINATION: u64 = 2;
    pub const QUERY: u64 = 3;
    pub const PAYLOAD: u64 = 4;
    pub const TRIAL: u64 = 5;
}
