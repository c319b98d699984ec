//! Equi-join by Cartesian gather over aligned key groups.

use super::{key_axis_align, TensorRelation};
use crate::error::{Error, Result};
use crate::exec::ExecOutcome;
use crate::prefetch;
use crate::relation::{join_output_schema, Column, Relation};
use crate::spill::SpillStats;

/// Largest join output materialized unless a different cap is given.
pub const DEFAULT_OUTPUT_CAP: u64 = 1 << 31;

/// Joins two indexed relations on their key axes. Output rows follow left
/// input order; each left row is followed by its matches in right input
/// order.
pub fn tensor_join(left: &TensorRelation<'_>, right: &TensorRelation<'_>) -> Result<ExecOutcome> {
    tensor_join_with_cap(left, right, DEFAULT_OUTPUT_CAP)
}

pub fn tensor_join_with_cap(
    left: &TensorRelation<'_>,
    right: &TensorRelation<'_>,
    output_cap: u64,
) -> Result<ExecOutcome> {
    if left.key_name() != right.key_name() {
        return Err(Error::ShapeMismatch(format!(
            "key axes `{}` and `{}` differ",
            left.key_name(),
            right.key_name()
        )));
    }
    let schema = join_output_schema(left.source().schema(), right.source().schema(), left.key_name())?;
    let align = key_axis_align(left, right);

    let mut rows = 0u64;
    for (&lg, &rg) in align.left_groups.iter().zip(&align.right_groups) {
        rows += left.group(lg as usize).len() as u64 * right.group(rg as usize).len() as u64;
    }
    if rows > output_cap {
        return Err(Error::OutputTooLarge { rows, cap: output_cap });
    }

    let rows = rows as usize;
    // Scattering each right group's position range onto its left rows lets
    // the left columns be gathered sequentially.
    let mut right_of = vec![(0u32, 0u32); left.row_count()];
    let roff = right.offsets();
    for (&lg, &rg) in align.left_groups.iter().zip(&align.right_groups) {
        let range = (roff[rg as usize], roff[rg as usize + 1]);
        for &l in left.group(lg as usize) {
            right_of[l as usize] = range;
        }
    }
    let mut li = Vec::with_capacity(rows);
    let mut ri = Vec::with_capacity(rows);
    let rpos = right.positions();
    for (l, &(start, end)) in right_of.iter().enumerate() {
        if let Some(&(next, _)) = right_of.get(l + prefetch::DISTANCE) {
            prefetch::read(rpos.as_ptr().wrapping_add(next as usize));
        }
        for &r in &rpos[start as usize..end as usize] {
            li.push(l as u32);
            ri.push(r);
        }
    }
    let scratch = right_of.capacity() as u64 * 8;
    drop(right_of);

    let (lsrc, rsrc) = (left.source(), right.source());
    let mut columns: Vec<Column> = lsrc.columns().iter().map(|c| c.gather(&li)).collect();
    for (j, c) in rsrc.columns().iter().enumerate() {
        if j != right.key_attr() {
            columns.push(c.gather(&ri));
        }
    }
    let relation = Relation::new(schema, columns, rows)?;
    let peak = left.index_bytes()
        + right.index_bytes()
        + align.allocated_bytes()
        + (li.capacity() + ri.capacity()) as u64 * 4
        + scratch
        + relation.allocated_bytes();
    Ok(ExecOutcome {
        relation,
        spill: SpillStats::default(),
        peak_mem_bytes: peak,
        peak_build_bytes: 0,
        max_fanout: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digest::multiset_digest;
    use crate::generate::{generate_relation, GenSpec};
    use crate::oracle::nested_loop_join_oracle;
    use crate::tensor::to_tensor;

    #[test]
    fn matches_nested_loop() {
        let l = generate_relation(&GenSpec::uniform(700, 60, 4, 1)).unwrap();
        let r = generate_relation(&GenSpec::zipf(500, 60, 1.1, 3, 2)).unwrap();
        let (tl, tr) = (to_tensor(&l, "key").unwrap(), to_tensor(&r, "key").unwrap());
        let out = tensor_join(&tl, &tr).unwrap();
        let oracle = nested_loop_join_oracle(&l, &r, "key").unwrap();
        assert_eq!(multiset_digest(&out.relation), multiset_digest(&oracle));
        assert_eq!(out.relation, oracle);
        assert!(out.spill.is_zero());
        assert!(out.peak_mem_bytes >= out.relation.allocated_bytes());
    }

    #[test]
    fn output_cap_enforced() {
        let l = generate_relation(&GenSpec::uniform(100, 1, 0, 1)).unwrap();
        let (tl, tr) = (to_tensor(&l, "key").unwrap(), to_tensor(&l, "key").unwrap());
        match tensor_join_with_cap(&tl, &tr, 9_999) {
            Err(Error::OutputTooLarge { rows, cap }) => assert_eq!((rows, cap), (10_000, 9_999)),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(tensor_join_with_cap(&tl, &tr, 10_000).unwrap().relation.row_count(), 10_000);
    }

    #[test]
    fn peak_is_deterministic() {
        let l = generate_relation(&GenSpec::uniform(5000, 300, 8, 4)).unwrap();
        let r = generate_relation(&GenSpec::uniform(3000, 300, 8, 5)).unwrap();
        let run = || {
            let (tl, tr) = (to_tensor(&l, "key").unwrap(), to_tensor(&r, "key").unwrap());
            tensor_join(&tl, &tr).unwrap().peak_mem_bytes
        };
        assert_eq!(run(), run());
    }
}
