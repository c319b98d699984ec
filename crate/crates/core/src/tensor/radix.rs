//! Stable LSD radix sort over order-preserving `u64` keys.

const DIGIT_BITS: u32 = 11;
const RADIX: usize = 1 << DIGIT_BITS;

/// Maps `i64` to `u64` preserving order.
#[inline]
pub(crate) fn order_key_i64(k: i64) -> u64 {
    (k as u64) ^ (1 << 63)
}

#[inline]
pub(crate) fn from_order_key_i64(u: u64) -> i64 {
    (u ^ (1 << 63)) as i64
}

/// Sorts `(keys[i], vals[i])` pairs by key, stably. Keys are rebased on their
/// minimum and only the digits spanning `max - min` are processed.
pub(crate) fn sort_pairs(mut keys: Vec<u64>, mut vals: Vec<u32>) -> (Vec<u64>, Vec<u32>) {
    debug_assert_eq!(keys.len(), vals.len());
    let n = keys.len();
    if n < 2 {
        return (keys, vals);
    }
    let (min, max) = keys
        .iter()
        .fold((u64::MAX, 0u64), |(lo, hi), &k| (lo.min(k), hi.max(k)));
    let span = max - min;
    if span == 0 {
        return (keys, vals);
    }
    let bits = 64 - span.leading_zeros();
    let passes = bits.div_ceil(DIGIT_BITS);

    let mut hist = vec![[0u32; RADIX]; passes as usize];
    for &k in &keys {
        let r = k - min;
        for (p, h) in hist.iter_mut().enumerate() {
            h[((r >> (p as u32 * DIGIT_BITS)) as usize) & (RADIX - 1)] += 1;
        }
    }

    let mut keys_tmp = vec![0u64; n];
    let mut vals_tmp = vec![0u32; n];
    for (p, h) in hist.iter().enumerate() {
        let shift = p as u32 * DIGIT_BITS;
        if h.iter().any(|&c| c as usize == n) {
            continue;
        }
        let mut cursor = [0u32; RADIX];
        let mut acc = 0u32;
        for (c, &count) in cursor.iter_mut().zip(h.iter()) {
            *c = acc;
            acc += count;
        }
        for i in 0..n {
            let k = keys[i];
            let d = (((k - min) >> shift) as usize) & (RADIX - 1);
            let at = cursor[d] as usize;
            cursor[d] += 1;
            keys_tmp[at] = k;
            vals_tmp[at] = vals[i];
        }
        std::mem::swap(&mut keys, &mut keys_tmp);
        std::mem::swap(&mut vals, &mut vals_tmp);
    }
    (keys, vals)
}
