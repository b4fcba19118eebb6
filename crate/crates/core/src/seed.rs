//! Named random sub-streams derived from one top-level seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed for the sub-stream `name` of `seed`. Derived seeds stay
/// below 2^63 so they can be written as TOML integers.
pub fn derive(seed: u64, name: &str) -> u64 {
    let mut h = splitmix64(seed);
    for b in name.bytes() {
        h = splitmix64(h ^ b as u64);
    }
    h >> 1
}

/// Stable seed for item `index` of the sub-stream `name`, e.g. chunk `k` of a refinement run.
pub fn derive_indexed(seed: u64, name: &str, index: u64) -> u64 {
    splitmix64(derive(seed, name) ^ splitmix64(index.wrapping_add(1))) >> 1
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
