//! Brute-force reference operators. Quadratic or comparison-based on
//! purpose; they share no code path with either engine beyond the relation
//! container itself.

use std::cmp::Ordering;

use crate::error::Result;
use crate::order::{Direction, SortSpec};
use crate::relation::{join_output_schema, Column, Relation};

/// All pairs `(l, r)` with equal `key`, in left-major order. O(|L|·|R|).
pub fn nested_loop_join_oracle(left: &Relation, right: &Relation, key: &str) -> Result<Relation> {
    let schema = join_output_schema(left.schema(), right.schema(), key)?;
    let lk = left.schema().require_int(key)?;
    let rk = right.schema().require_int(key)?;
    let lkeys = left.column(lk).as_int().expect("int key");
    let rkeys = right.column(rk).as_int().expect("int key");

    let mut li = Vec::new();
    let mut ri = Vec::new();
    for (i, a) in lkeys.iter().enumerate() {
        for (j, b) in rkeys.iter().enumerate() {
            if a == b {
                li.push(i as u32);
                ri.push(j as u32);
            }
        }
    }
    let mut columns: Vec<Column> = left.columns().iter().map(|c| c.gather(&li)).collect();
    for (j, c) in right.columns().iter().enumerate() {
        if j != rk {
            columns.push(c.gather(&ri));
        }
    }
    Relation::new(schema, columns, li.len())
}

/// Stable lexicographic sort by `spec`; ties keep their original order.
pub fn comparison_sort_oracle(rel: &Relation, spec: &SortSpec) -> Result<Relation> {
    let keys = spec.resolve(rel.schema())?;
    let mut idx: Vec<u32> = (0..rel.row_count() as u32).collect();
    idx.sort_by(|&a, &b| {
        for k in &keys {
            let ord = match rel.column(k.index) {
                Column::Int64(v) => v[a as usize].cmp(&v[b as usize]),
                c @ Column::Bytes { .. } => c.bytes_at(a as usize).cmp(c.bytes_at(b as usize)),
            };
            let ord = if k.direction == Direction::Desc { ord.reverse() } else { ord };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    });
    Ok(rel.take(&idx))
}
