//! Order-independent multiset digests of relation contents.

use std::fmt;

use xxhash_rust::xxh3::{xxh3_128, Xxh3};

use crate::relation::Relation;

/// 128-bit multiset digest: the wrapping sum of the XXH3-128 hash of every
/// canonical row. The empty relation digests to [`ResultDigest::EMPTY`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ResultDigest(pub u128);

impl ResultDigest {
    pub const EMPTY: ResultDigest = ResultDigest(0);

    pub fn to_hex(self) -> String {
        format!("{:032x}", self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != 32 {
            return None;
        }
        u128::from_str_radix(s, 16).ok().map(ResultDigest)
    }
}

impl fmt::Display for ResultDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Streaming accumulator over canonical rows.
#[derive(Debug, Default, Clone, Copy)]
pub struct DigestAccumulator(u128);

impl DigestAccumulator {
    #[inline]
    pub fn add_row(&mut self, canonical: &[u8]) {
        self.0 = self.0.wrapping_add(xxh3_128(canonical));
    }

    pub fn finish(self) -> ResultDigest {
        ResultDigest(self.0)
    }
}

pub fn multiset_digest(rel: &Relation) -> ResultDigest {
    let mut acc = DigestAccumulator::default();
    let mut buf = Vec::with_capacity(rel.schema().row_width());
    for row in 0..rel.row_count() {
        buf.clear();
        rel.write_row(row, &mut buf);
        acc.add_row(&buf);
    }
    acc.finish()
}

/// Order-sensitive digest: XXH3-128 over the concatenated canonical rows.
/// Used where row order is part of the result, as for sorts.
pub fn sequence_digest(rel: &Relation) -> ResultDigest {
    let mut h = Xxh3::new();
    let mut buf = Vec::with_capacity(rel.schema().row_width());
    for row in 0..rel.row_count() {
        buf.clear();
        rel.write_row(row, &mut buf);
        h.update(&buf);
    }
    ResultDigest(h.digest128())
}
