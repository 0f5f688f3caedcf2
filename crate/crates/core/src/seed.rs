//! Deterministic seed derivation.
//!
//! One global seed fans out to every stochastic stage through a fixed,
//! platform-independent mix (FNV-1a over the stage name, then splitmix64).
//! `std`'s default hasher is randomized per process, so it is not used here.

/// FNV-1a over a byte string. Stable across platforms and releases.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// splitmix64 finalizer; decorrelates structured inputs.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for a named stage, derived from the run's global seed.
pub fn derive_seed(global: u64, stage: &str) -> u64 {
    splitmix64(global ^ fnv1a64(stage.as_bytes()))
}

/// Seed for an indexed substage (shard number, client number, ...).
pub fn derive_seed_indexed(global: u64, stage: &str, index: u64) -> u64 {
    splitmix64(derive_seed(global, stage) ^ splitmix64(index))
}
