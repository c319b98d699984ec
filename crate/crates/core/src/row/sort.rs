//! Run-based external merge sort.

use std::cmp::Ordering;

use crate::error::Result;
use crate::exec::ExecOutcome;
use crate::order::{compare_rows, ResolvedKey, SortSpec};
use crate::relation::{Relation, RelationBuilder};
use crate::row::MemoryBudget;
use crate::spill::{StreamId, StreamReader, TempArena, BLOCK_SIZE};

pub const MERGE_FAN_IN: usize = 64;

/// Per-row bookkeeping charged on top of the row bytes: the `u32` sort
/// index plus the stable sort's scratch space.
const SORT_ENTRY_BYTES: u64 = 8;

/// Bytes the in-memory sort buffer needs for `rows` rows.
pub fn sort_charge(rows: u64, row_width: usize) -> u64 {
    rows * (row_width as u64 + SORT_ENTRY_BYTES)
}

/// Stable sort of `rel` by `spec`, spilling sorted runs when the input does
/// not fit in `budget`.
pub fn external_sort_row(
    rel: &Relation,
    spec: &SortSpec,
    budget: MemoryBudget,
    arena: &mut TempArena,
) -> Result<ExecOutcome> {
    let keys = spec.resolve(rel.schema())?;
    let width = rel.schema().row_width();
    let n = rel.row_count();
    let before = arena.stats();
    let mut out = RelationBuilder::with_capacity(rel.schema().clone(), n);

    if sort_charge(n as u64, width) <= budget.bytes() {
        let (buf, order, held) = sort_chunk(rel, 0, n, &keys);
        for &i in &order {
            out.push_row(&buf[i as usize * width..(i as usize + 1) * width]);
        }
        return Ok(ExecOutcome {
            relation: out.finish(),
            spill: arena.stats().since(&before),
            peak_mem_bytes: held,
            peak_build_bytes: held,
            max_fanout: 0,
        });
    }

    let run_rows = (budget.bytes() / (width as u64 + SORT_ENTRY_BYTES)).max(1) as usize;
    let mut runs = Vec::with_capacity(n.div_ceil(run_rows));
    let mut peak_build = 0;
    let mut start = 0;
    while start < n {
        let end = (start + run_rows).min(n);
        let (buf, order, held) = sort_chunk(rel, start, end, &keys);
        peak_build = peak_build.max(held);
        let id = arena.create_stream(width)?;
        for &i in &order {
            arena.spill_row(id, &buf[i as usize * width..(i as usize + 1) * width])?;
        }
        arena.seal(id)?;
        runs.push(id);
        start = end;
    }
    arena.record_sort_runs(runs.len() as u64);
    // open readers plus the output block of an intermediate pass
    let merge_bytes = (runs.len().min(MERGE_FAN_IN) as u64 + 1) * BLOCK_SIZE as u64;

    // Merging consecutive groups keeps earlier runs ahead on ties, which
    // preserves stability across passes.
    while runs.len() > MERGE_FAN_IN {
        let mut next = Vec::with_capacity(runs.len().div_ceil(MERGE_FAN_IN));
        for group in runs.chunks(MERGE_FAN_IN) {
            let id = arena.create_stream(width)?;
            let readers = open_all(arena, group)?;
            merge(readers, &keys, |row| arena.spill_row(id, row))?;
            arena.seal(id)?;
            next.push(id);
        }
        runs = next;
    }
    let readers = open_all(arena, &runs)?;
    merge(readers, &keys, |row| {
        out.push_row(row);
        Ok(())
    })?;

    Ok(ExecOutcome {
        relation: out.finish(),
        spill: arena.stats().since(&before),
        peak_mem_bytes: peak_build.max(merge_bytes),
        peak_build_bytes: peak_build,
        max_fanout: 0,
    })
}

/// Serializes rows `start..end` and returns them with their stable sort
/// order (indexes relative to `start`) and the bytes held.
fn sort_chunk(rel: &Relation, start: usize, end: usize, keys: &[ResolvedKey]) -> (Vec<u8>, Vec<u32>, u64) {
    let width = rel.schema().row_width();
    let mut buf = Vec::with_capacity((end - start) * width);
    for r in start..end {
        rel.write_row(r, &mut buf);
    }
    let mut order: Vec<u32> = (0..(end - start) as u32).collect();
    if width > 0 {
        order.sort_by(|&a, &b| {
            let (a, b) = (a as usize, b as usize);
            compare_rows(keys, &buf[a * width..(a + 1) * width], &buf[b * width..(b + 1) * width])
        });
    }
    let held = buf.capacity() as u64 + order.len() as u64 * SORT_ENTRY_BYTES;
    (buf, order, held)
}

fn open_all(arena: &mut TempArena, runs: &[StreamId]) -> Result<Vec<StreamReader>> {
    runs.iter().map(|&id| arena.read_stream(id)).collect()
}

/// K-way merge through a binary heap of reader indexes; ties go to the lower
/// index.
fn merge(
    mut readers: Vec<StreamReader>,
    keys: &[ResolvedKey],
    mut emit: impl FnMut(&[u8]) -> Result<()>,
) -> Result<()> {
    let mut heap: Vec<usize> = Vec::with_capacity(readers.len());
    for (i, r) in readers.iter_mut().enumerate() {
        if r.advance()? {
            heap.push(i);
        }
    }
    let less = |readers: &[StreamReader], a: usize, b: usize| -> bool {
        match compare_rows(keys, readers[a].current().unwrap(), readers[b].current().unwrap()) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => a < b,
        }
    };
    for i in (0..heap.len() / 2).rev() {
        sift_down(&mut heap, i, |a, b| less(&readers, a, b));
    }
    while let Some(&top) = heap.first() {
        emit(readers[top].current().unwrap())?;
        if !readers[top].advance()? {
            let last = heap.pop().unwrap();
            if heap.is_empty() {
                break;
            }
            heap[0] = last;
        }
        sift_down(&mut heap, 0, |a, b| less(&readers, a, b));
    }
    Ok(())
}

fn sift_down(heap: &mut [usize], mut i: usize, less: impl Fn(usize, usize) -> bool) {
    loop {
        let l = 2 * i + 1;
        if l >= heap.len() {
            return;
        }
        let r = l + 1;
        let child = if r < heap.len() && less(heap[r], heap[l]) { r } else { l };
        if less(heap[child], heap[i]) {
            heap.swap(child, i);
            i = child;
        } else {
            return;
        }
    }
}
