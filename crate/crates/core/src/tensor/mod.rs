//! The dimension-preserving execution path.
//!
//! A [`TensorRelation`] keeps every attribute as its own axis (the source
//! relation's columns) and adds a sparse key axis: the sorted distinct join
//! key values, each with the grouped list of row positions holding it. Joins
//! align two key axes and gather the Cartesian product of matching groups
//! column by column; sorts compose a single permutation from stable per-axis
//! passes. Nothing on this path touches a temp file.

mod align;
mod join;
mod radix;
mod sort;

use crate::error::Result;
use crate::prefetch;
use crate::relation::Relation;

pub use align::{key_axis_align, AxisAlignment};
pub use join::{tensor_join, tensor_join_with_cap, DEFAULT_OUTPUT_CAP};
pub use sort::tensor_sort;

/// Columnar relation with a grouped index over one `Int64` key axis.
#[derive(Debug, Clone)]
pub struct TensorRelation<'a> {
    source: &'a Relation,
    key_attr: usize,
    keys: Vec<i64>,
    offsets: Vec<u32>,
    positions: Vec<u32>,
    build_peak_bytes: u64,
}

/// Key spans up to this many times the row count are indexed by direct
/// addressing instead of radix sorting.
const DENSE_SPAN_FACTOR: u64 = 4;

/// Indexes `rel` on `key`. Dense key ranges use one counting-sort pass over
/// the span; sparse ranges use a stable LSD radix sort of `(key, position)`
/// pairs. Either way positions inside a group ascend.
pub fn to_tensor<'a>(rel: &'a Relation, key: &str) -> Result<TensorRelation<'a>> {
    let key_attr = rel.schema().require_int(key)?;
    let column = rel.column(key_attr).as_int().expect("int key");
    let (lo, hi) = column
        .iter()
        .fold((i64::MAX, i64::MIN), |(lo, hi), &k| (lo.min(k), hi.max(k)));
    let span = (hi as i128 - lo as i128) as u128;
    let index = if !column.is_empty() && span < (DENSE_SPAN_FACTOR * column.len() as u64) as u128 {
        dense_index(column, lo, span as usize + 1)
    } else {
        sparse_index(column)
    };
    Ok(TensorRelation {
        source: rel,
        key_attr,
        keys: index.keys,
        offsets: index.offsets,
        positions: index.positions,
        build_peak_bytes: index.peak,
    })
}

struct KeyIndex {
    keys: Vec<i64>,
    offsets: Vec<u32>,
    positions: Vec<u32>,
    peak: u64,
}

fn dense_index(column: &[i64], lo: i64, slots: usize) -> KeyIndex {
    let slot = |k: i64| (k - lo) as usize;
    let mut cursor = vec![0u32; slots];
    for (i, &k) in column.iter().enumerate() {
        if let Some(&next) = column.get(i + prefetch::DISTANCE) {
            prefetch::read(cursor.as_ptr().wrapping_add(slot(next)));
        }
        cursor[slot(k)] += 1;
    }
    let distinct_bound = column.len().min(slots);
    let mut keys = Vec::with_capacity(distinct_bound);
    let mut offsets = Vec::with_capacity(distinct_bound + 1);
    let mut acc = 0u32;
    for (s, c) in cursor.iter_mut().enumerate() {
        let count = *c;
        *c = acc;
        if count > 0 {
            keys.push(lo + s as i64);
            offsets.push(acc);
            acc += count;
        }
    }
    offsets.push(acc);
    let mut positions = vec![0u32; column.len()];
    for (i, &k) in column.iter().enumerate() {
        if let Some(&next) = column.get(i + prefetch::DISTANCE) {
            let at = cursor[slot(next)] as usize;
            prefetch::read(positions.as_ptr().wrapping_add(at));
        }
        let c = &mut cursor[slot(k)];
        positions[*c as usize] = i as u32;
        *c += 1;
    }
    let peak = slots as u64 * 4;
    KeyIndex { keys, offsets, positions, peak }
}

fn sparse_index(column: &[i64]) -> KeyIndex {
    let n = column.len();
    let sort_keys: Vec<u64> = column.iter().map(|&k| radix::order_key_i64(k)).collect();
    let (sorted, positions) = radix::sort_pairs(sort_keys, (0..n as u32).collect());
    let mut keys = Vec::new();
    let mut offsets = Vec::new();
    for (i, &k) in sorted.iter().enumerate() {
        if i == 0 || k != sorted[i - 1] {
            keys.push(radix::from_order_key_i64(k));
            offsets.push(i as u32);
        }
    }
    offsets.push(n as u32);
    // key/position pairs plus their scatter buffers
    KeyIndex { keys, offsets, positions, peak: 2 * n as u64 * 12 }
}

impl<'a> TensorRelation<'a> {
    pub fn source(&self) -> &'a Relation {
        self.source
    }

    pub fn key_attr(&self) -> usize {
        self.key_attr
    }

    pub fn key_name(&self) -> &str {
        &self.source.schema().attribute(self.key_attr).name
    }

    pub fn row_count(&self) -> usize {
        self.positions.len()
    }

    /// Strictly increasing distinct key values.
    pub fn distinct_keys(&self) -> &[i64] {
        &self.keys
    }

    /// Group boundaries: group `g` owns `positions[offsets[g]..offsets[g + 1]]`.
    pub fn offsets(&self) -> &[u32] {
        &self.offsets
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    /// Row positions holding the `g`-th distinct key.
    pub fn group(&self, g: usize) -> &[u32] {
        &self.positions[self.offsets[g] as usize..self.offsets[g + 1] as usize]
    }

    /// Bytes of the key index (distinct keys, offsets, positions).
    pub fn index_bytes(&self) -> u64 {
        (self.keys.len() * 8 + self.offsets.len() * 4 + self.positions.len() * 4) as u64
    }

    /// Transient bytes used while building the index.
    pub fn build_peak_bytes(&self) -> u64 {
        self.build_peak_bytes
    }

    /// Flattens back to a relation, rows grouped by key.
    pub fn to_relation(&self) -> Relation {
        self.source.take(&self.positions)
    }
}
