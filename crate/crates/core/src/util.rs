//! Small shared helpers: seed derivation and the parallel/sequential map switch.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Deterministic RNG used everywhere in the crate.
pub type Rng = ChaCha12Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Derive a per-subsystem seed from one global seed and a label, so a single
/// configured seed drives every stage reproducibly.
pub fn derive_seed(global: u64, label: &str) -> u64 {
    splitmix64(global ^ fnv1a64(label.as_bytes()))
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Order-preserving map over a slice. Runs on the rayon pool when the
/// `parallel` feature is enabled, sequentially otherwise. Because the output
/// keeps input order, any later reduction over it is deterministic either way.
#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
