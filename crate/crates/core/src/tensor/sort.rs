//! Multi-key sort by stable per-axis passes.

use super::radix;
use crate::error::Result;
use crate::exec::ExecOutcome;
use crate::order::{Direction, SortSpec};
use crate::relation::{Column, Relation};
use crate::spill::SpillStats;

/// Stable sort of `rel` by `spec`. Keys are applied least significant first,
/// each pass reordering one permutation: `Int64` axes by radix sort,
/// fixed-width byte axes by a stable comparison sort.
pub fn tensor_sort(rel: &Relation, spec: &SortSpec) -> Result<ExecOutcome> {
    let keys = spec.resolve(rel.schema())?;
    let n = rel.row_count();
    let mut perm: Vec<u32> = (0..n as u32).collect();
    let mut scratch = 0u64;
    for k in keys.iter().rev() {
        match rel.column(k.index) {
            Column::Int64(v) => {
                let sort_keys: Vec<u64> = perm
                    .iter()
                    .map(|&p| {
                        let u = radix::order_key_i64(v[p as usize]);
                        if k.direction == Direction::Desc { !u } else { u }
                    })
                    .collect();
                let (_, sorted) = radix::sort_pairs(sort_keys, perm);
                perm = sorted;
                scratch = scratch.max(n as u64 * 24);
            }
            c @ Column::Bytes { .. } => {
                if k.direction == Direction::Desc {
                    perm.sort_by(|&a, &b| c.bytes_at(b as usize).cmp(c.bytes_at(a as usize)));
                } else {
                    perm.sort_by(|&a, &b| c.bytes_at(a as usize).cmp(c.bytes_at(b as usize)));
                }
                scratch = scratch.max(n as u64 * 2);
            }
        }
    }
    let relation = rel.take(&perm);
    let peak = perm.capacity() as u64 * 4 + scratch + relation.allocated_bytes();
    Ok(ExecOutcome {
        relation,
        spill: SpillStats::default(),
        peak_mem_bytes: peak,
        peak_build_bytes: 0,
        max_fanout: 0,
    })
}
