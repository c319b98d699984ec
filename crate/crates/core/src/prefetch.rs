//! Software prefetch hints for gather and scatter loops.

/// How many iterations ahead random-access loops issue their prefetches.
pub(crate) const DISTANCE: usize = 16;

#[inline(always)]
pub(crate) fn read<T>(p: *const T) {
    #[cfg(target_arch = "x86_64")]
    // SAFETY: prefetch is a hint; it never faults, even on invalid addresses.
    unsafe {
        std::arch::x86_64::_mm_prefetch(p as *const i8, std::arch::x86_64::_MM_HINT_T0)
    }
    #[cfg(not(target_arch = "x86_64"))]
    let _ = p;
}

/// Prefetches every cache line of `len` bytes starting at `p`.
#[inline(always)]
pub(crate) fn read_span(p: *const u8, len: usize) {
    let mut off = 0;
    while off < len {
        read(p.wrapping_add(off));
        off += 64;
    }
    if len > 0 {
        read(p.wrapping_add(len - 1));
    }
}
