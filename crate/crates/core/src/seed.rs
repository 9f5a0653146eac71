//! Seed derivation. Every stream of randomness in the engine is keyed by
//! `(master, domain, index)` so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere in the crate.
pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Domain tags keep independent streams apart even when indices coincide.
pub mod domain {
    pub const SIMULATION: u64 = 1;
    pub const GRAPH: u64 = 2;
    pub const GRAPH_RETRY: u64 = 3;
    pub const BOOTSTRAP: u64 = 4;
    pub const BOOTSTRAP_NO_MESSAGING: u64 = 5;
    pub const BOOTSTRAP_MESSAGING: u64 = 6;
    pub const SAMPLER: u64 = 7;
    pub const CELL: u64 = 8;
    pub const TREND_SHOCK: u64 = 9;
}

pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(domain)).wrapping_add(index.wrapping_mul(GOLDEN)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 64-bit FNV-1a, used to fingerprint canonical strings (condition keys).
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
