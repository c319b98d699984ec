//! Seeded 64-bit hashing for partitioning and bucket selection.

/// Seed of the first partitioning level.
pub const INITIAL_SEED: u64 = 0x243F_6A88_85A3_08D3;
/// Seed of in-memory hash-table bucket selection, fixed across levels.
pub(crate) const TABLE_SEED: u64 = 0x1319_8A2E_0370_7344;

const SEED_STEP: u64 = 0x9E37_79B9_7F4A_7C15;

/// MurmurHash3 `fmix64` finalizer.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^= x >> 33;
    x
}

/// Seed for the level below `depth`: `seed * odd + depth`.
#[inline]
pub fn next_seed(seed: u64, depth: u32) -> u64 {
    seed.wrapping_mul(SEED_STEP).wrapping_add(depth as u64)
}

/// Partition in `[0, fanout)` by multiply-shift on the high hash bits.
#[inline]
pub fn partition_of(key: i64, seed: u64, fanout: u32) -> usize {
    ((mix64(key as u64 ^ seed) as u128 * fanout as u128) >> 64) as usize
}

#[inline]
pub(crate) fn bucket_of(key: i64, mask: u64) -> usize {
    (mix64(key as u64 ^ TABLE_SEED) & mask) as usize
}
