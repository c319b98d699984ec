//! Budgeted hash join with recursive Grace partitioning.

use crate::error::{Error, Result};
use crate::exec::ExecOutcome;
use crate::prefetch;
use crate::relation::{read_i64, JoinLayout, Relation, RelationBuilder};
use crate::row::hash::{bucket_of, next_seed, partition_of, INITIAL_SEED};
use crate::row::{BuildSide, JoinSpec, MemoryBudget};
use crate::spill::{StreamId, TempArena, BLOCK_SIZE};

pub const MAX_FANOUT: u32 = 1024;
/// Partitioning levels attempted before a key group is declared unjoinable.
pub const MAX_RECURSION: u32 = 8;

/// Fewest buckets a table of `rows` rows is built with: about four rows
/// per bucket.
fn min_bucket_count(rows: u64) -> u64 {
    rows.div_ceil(4).max(1).next_power_of_two()
}

/// Buckets actually used: grown while the budget has room, up to a bucket
/// array of a sixteenth of the row bytes.
fn bucket_count(rows: u64, row_width: usize, budget: u64) -> u64 {
    let row_bytes = rows * row_width as u64;
    let min = min_bucket_count(rows);
    let mut nb = min.max(prev_power_of_two(row_bytes / 16));
    while nb > min && row_bytes + 4 * (nb + 1) > budget {
        nb /= 2;
    }
    nb
}

fn prev_power_of_two(x: u64) -> u64 {
    if x == 0 {
        0
    } else {
        1 << (63 - x.leading_zeros())
    }
}

/// Smallest footprint of an in-memory build table for `rows` rows of
/// `row_width` bytes: the packed rows plus the minimal `u32` bucket offset
/// array. A partition is joined in memory iff this fits the budget.
pub fn table_charge(rows: u64, row_width: usize) -> u64 {
    rows * row_width as u64 + 4 * (min_bucket_count(rows) + 1)
}

/// Equi-join of `left` and `right` on `spec.key`, never holding a build
/// table larger than `budget`. Spilled partitions go through `arena`.
pub fn hash_join_row(
    left: &Relation,
    right: &Relation,
    spec: &JoinSpec,
    budget: MemoryBudget,
    arena: &mut TempArena,
) -> Result<ExecOutcome> {
    let (schema, layout) = JoinLayout::new(left.schema(), right.schema(), &spec.key)?;
    let side = spec.build_side.unwrap_or(if right.row_count() <= left.row_count() {
        BuildSide::Right
    } else {
        BuildSide::Left
    });
    let (build, probe) = match side {
        BuildSide::Left => (left, right),
        BuildSide::Right => (right, left),
    };
    let build_is_left = side == BuildSide::Left;
    let (build_key, probe_key) = if build_is_left {
        (layout.left_key_offset(), layout.right_key_offset())
    } else {
        (layout.right_key_offset(), layout.left_key_offset())
    };
    let before = arena.stats();
    let mut ctx = JoinCtx {
        arena,
        budget: budget.bytes(),
        layout,
        build_is_left,
        build: SideInfo {
            width: build.schema().row_width(),
            key_offset: build_key,
            key_column: build.schema().require_int(&spec.key)?,
        },
        probe: SideInfo {
            width: probe.schema().row_width(),
            key_offset: probe_key,
            key_column: probe.schema().require_int(&spec.key)?,
        },
        out: RelationBuilder::with_capacity(schema, probe.row_count()),
        peak_build: 0,
        peak_mem: 0,
        max_fanout: 0,
    };
    ctx.join_level(
        Source::Relation(build),
        Source::Relation(probe),
        build.row_count() as u64,
        0,
        INITIAL_SEED,
    )?;
    let JoinCtx {
        arena,
        out,
        peak_build,
        peak_mem,
        max_fanout,
        ..
    } = ctx;
    Ok(ExecOutcome {
        relation: out.finish(),
        spill: arena.stats().since(&before),
        peak_mem_bytes: peak_mem,
        peak_build_bytes: peak_build,
        max_fanout,
    })
}

#[derive(Clone, Copy)]
enum Source<'a> {
    Relation(&'a Relation),
    Stream(StreamId),
}

#[derive(Clone, Copy)]
struct SideInfo {
    width: usize,
    key_offset: usize,
    key_column: usize,
}

struct JoinCtx<'a> {
    arena: &'a mut TempArena,
    budget: u64,
    layout: JoinLayout,
    build_is_left: bool,
    build: SideInfo,
    probe: SideInfo,
    out: RelationBuilder,
    peak_build: u64,
    peak_mem: u64,
    max_fanout: u32,
}

/// Packed build rows grouped by bucket; bucket `b` owns rows
/// `offsets[b]..offsets[b + 1]`.
struct BuildTable {
    rows: Vec<u8>,
    offsets: Vec<u32>,
    mask: u64,
}

impl BuildTable {
    fn allocated_bytes(&self) -> u64 {
        (self.rows.capacity() + self.offsets.capacity() * 4) as u64
    }
}

impl<'a> JoinCtx<'a> {
    fn join_level(
        &mut self,
        build: Source<'_>,
        probe: Source<'_>,
        build_rows: u64,
        depth: u32,
        seed: u64,
    ) -> Result<()> {
        let width = self.build.width;
        if table_charge(build_rows, width) <= self.budget {
            return self.join_in_memory(build, probe, build_rows);
        }
        let build_bytes = build_rows * width as u64;
        if depth >= MAX_RECURSION {
            return Err(Error::BudgetTooSmall {
                bytes: build_bytes,
                budget: self.budget,
                depth,
            });
        }
        let fanout = (build_bytes.div_ceil(self.budget) + 1).min(MAX_FANOUT as u64) as u32;
        self.max_fanout = self.max_fanout.max(fanout);
        self.arena.record_partition_pass();

        let build_parts = self.partition(build, self.build, fanout, seed)?;
        let probe_parts = self.partition(probe, self.probe, fanout, seed)?;
        let child_seed = next_seed(seed, depth);
        for (b, p) in build_parts.into_iter().zip(probe_parts) {
            let rows = self.arena.stream_rows(b);
            if rows == 0 || self.arena.stream_rows(p) == 0 {
                continue;
            }
            self.join_level(Source::Stream(b), Source::Stream(p), rows, depth + 1, child_seed)?;
        }
        Ok(())
    }

    fn partition(
        &mut self,
        src: Source<'_>,
        side: SideInfo,
        fanout: u32,
        seed: u64,
    ) -> Result<Vec<StreamId>> {
        let parts = (0..fanout)
            .map(|_| self.arena.create_stream(side.width))
            .collect::<Result<Vec<_>>>()?;
        let arena = &mut *self.arena;
        match src {
            Source::Relation(rel) => {
                let keys = rel.column(side.key_column).as_int().expect("int key");
                let mut buf = Vec::with_capacity(side.width);
                for (row, &key) in keys.iter().enumerate() {
                    buf.clear();
                    rel.write_row(row, &mut buf);
                    arena.spill_row(parts[partition_of(key, seed, fanout)], &buf)?;
                }
            }
            Source::Stream(id) => {
                let mut reader = arena.read_stream(id)?;
                while let Some(row) = reader.next_row()? {
                    let key = read_i64(row, side.key_offset);
                    arena.spill_row(parts[partition_of(key, seed, fanout)], row)?;
                }
            }
        }
        let held = self.arena.buffered_bytes() + BLOCK_SIZE as u64;
        self.peak_mem = self.peak_mem.max(held);
        for &p in &parts {
            self.arena.seal(p)?;
        }
        Ok(parts)
    }

    fn join_in_memory(&mut self, build: Source<'_>, probe: Source<'_>, build_rows: u64) -> Result<()> {
        let table = self.build_table(build, build_rows)?;
        let charge = table.allocated_bytes();
        self.peak_build = self.peak_build.max(charge);
        let readers = matches!(build, Source::Stream(_)) as u64 + matches!(probe, Source::Stream(_)) as u64;
        self.peak_mem = self.peak_mem.max(charge + readers * BLOCK_SIZE as u64);

        let bw = self.build.width;
        let bk = self.build.key_offset;
        let pk = self.probe.key_offset;
        let build_is_left = self.build_is_left;
        let layout = &self.layout;
        let out = &mut self.out;
        let matches = |key: i64| {
            let b = bucket_of(key, table.mask);
            (table.offsets[b] as usize..table.offsets[b + 1] as usize)
                .map(|slot| &table.rows[slot * bw..(slot + 1) * bw])
                .filter(move |c| read_i64(c, bk) == key)
        };
        let mut emit = |probe_row: &[u8], candidate: &[u8]| {
            if build_is_left {
                out.push_joined(layout, candidate, probe_row);
            } else {
                out.push_joined(layout, probe_row, candidate);
            }
        };
        match probe {
            Source::Relation(rel) => {
                let keys = rel.column(self.probe.key_column).as_int().expect("int key");
                let near = prefetch::DISTANCE / 2;
                let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(keys.len());
                for (r, &key) in keys.iter().enumerate() {
                    // bucket offsets far ahead, then the first candidate row
                    if let Some(&k) = keys.get(r + prefetch::DISTANCE) {
                        prefetch::read(table.offsets.as_ptr().wrapping_add(bucket_of(k, table.mask)));
                    }
                    if let Some(&k) = keys.get(r + near) {
                        let at = table.offsets[bucket_of(k, table.mask)] as usize * bw + bk;
                        prefetch::read(table.rows.as_ptr().wrapping_add(at));
                    }
                    let b = bucket_of(key, table.mask);
                    for slot in table.offsets[b]..table.offsets[b + 1] {
                        if read_i64(&table.rows[slot as usize * bw..], bk) == key {
                            pairs.push((r as u32, slot));
                        }
                    }
                }
                let scratch = pairs.capacity() as u64 * 8;
                self.peak_mem = self.peak_mem.max(charge + scratch);
                out.extend_joined(layout, &table.rows, bw, build_is_left, rel, &pairs);
            }
            Source::Stream(id) => {
                let mut reader = self.arena.read_stream(id)?;
                while let Some(row) = reader.next_row()? {
                    for candidate in matches(read_i64(row, pk)) {
                        emit(row, candidate);
                    }
                }
            }
        }
        Ok(())
    }

    /// Two passes over the build rows: count per bucket, then scatter each
    /// row into its bucket's slot range.
    fn build_table(&mut self, src: Source<'_>, rows: u64) -> Result<BuildTable> {
        let nb = bucket_count(rows, self.build.width, self.budget);
        let mask = nb - 1;
        let width = self.build.width;
        let key_offset = self.build.key_offset;
        let mut offsets = vec![0u32; nb as usize + 1];
        match src {
            Source::Relation(rel) => {
                let keys = rel.column(self.build.key_column).as_int().expect("int key");
                for (r, &k) in keys.iter().enumerate() {
                    if let Some(&next) = keys.get(r + prefetch::DISTANCE) {
                        prefetch::read(offsets.as_ptr().wrapping_add(bucket_of(next, mask) + 1));
                    }
                    offsets[bucket_of(k, mask) + 1] += 1;
                }
            }
            Source::Stream(id) => {
                let mut reader = self.arena.read_stream(id)?;
                while let Some(row) = reader.next_row()? {
                    offsets[bucket_of(read_i64(row, key_offset), mask) + 1] += 1;
                }
            }
        }
        for b in 1..offsets.len() {
            offsets[b] += offsets[b - 1];
        }
        // offsets[b] doubles as bucket b's write cursor, ending at the start
        // of bucket b + 1; shifted back afterwards.
        let mut packed = vec![0u8; rows as usize * width];
        match src {
            Source::Relation(rel) => {
                let keys = rel.column(self.build.key_column).as_int().expect("int key");
                for (r, &k) in keys.iter().enumerate() {
                    if let Some(&next) = keys.get(r + prefetch::DISTANCE) {
                        let at = offsets[bucket_of(next, mask)] as usize * width;
                        prefetch::read_span(packed.as_ptr().wrapping_add(at), width);
                    }
                    let b = bucket_of(k, mask);
                    let slot = offsets[b] as usize;
                    offsets[b] += 1;
                    rel.encode_row(r, &mut packed[slot * width..(slot + 1) * width]);
                }
            }
            Source::Stream(id) => {
                let mut reader = self.arena.read_stream(id)?;
                while let Some(row) = reader.next_row()? {
                    let b = bucket_of(read_i64(row, key_offset), mask);
                    let slot = offsets[b] as usize;
                    offsets[b] += 1;
                    packed[slot * width..(slot + 1) * width].copy_from_slice(row);
                }
            }
        }
        for b in (1..offsets.len()).rev() {
            offsets[b] = offsets[b - 1];
        }
        offsets[0] = 0;
        Ok(BuildTable {
            rows: packed,
            offsets,
            mask,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digest::multiset_digest;
    use crate::generate::{generate_relation, GenSpec};
    use crate::oracle::nested_loop_join_oracle;

    fn arena() -> (tempfile::TempDir, TempArena) {
        let root = tempfile::tempdir().unwrap();
        let a = TempArena::create(root.path()).unwrap();
        (root, a)
    }

    #[test]
    fn charge_has_bounded_overhead() {
        for rows in [0u64, 1, 3, 4, 5, 1000, 9999, 1 << 20] {
            let c = table_charge(rows, 8);
            assert!(c <= rows * 10 + 8, "rows={rows} charge={c}");
        }
    }

    #[test]
    fn grown_table_stays_within_budget() {
        for (rows, width, budget) in [(10_000u64, 100usize, 1u64 << 20), (1000, 8, 65536), (5000, 100, 64 << 20), (1, 1, 65536)] {
            let nb = bucket_count(rows, width, budget);
            assert!(nb >= min_bucket_count(rows) && nb.is_power_of_two());
            if table_charge(rows, width) <= budget {
                assert!(rows * width as u64 + 4 * (nb + 1) <= budget, "rows={rows} nb={nb}");
            }
        }
        assert_eq!(bucket_count(5000, 100, 64 << 20), 16384);
    }

    #[test]
    fn in_memory_regime_no_spill() {
        let (_root, mut a) = arena();
        let l = generate_relation(&GenSpec::uniform(1000, 200, 16, 1)).unwrap();
        let r = generate_relation(&GenSpec::uniform(1000, 200, 16, 2)).unwrap();
        let out = hash_join_row(&l, &r, &JoinSpec::on("key"), MemoryBudget::mib(64).unwrap(), &mut a).unwrap();
        assert!(out.spill.is_zero());
        assert_eq!(out.max_fanout, 0);
        let oracle = nested_loop_join_oracle(&l, &r, "key").unwrap();
        assert_eq!(multiset_digest(&out.relation), multiset_digest(&oracle));
        assert_eq!(out.relation.schema(), oracle.schema());
    }

    #[test]
    fn spilling_matches_oracle() {
        let (_root, mut a) = arena();
        let l = generate_relation(&GenSpec::uniform(20_000, 500, 8, 3)).unwrap();
        let r = generate_relation(&GenSpec::uniform(20_000, 500, 8, 4)).unwrap();
        let budget = MemoryBudget::kib(128).unwrap();
        let out = hash_join_row(&l, &r, &JoinSpec::on("key"), budget, &mut a).unwrap();
        assert!(out.spill.temp_blocks_written > 0);
        assert!(out.spill.partition_passes >= 1);
        assert!(out.peak_build_bytes <= budget.bytes() + out.max_fanout as u64 * 8192);
        let oracle = nested_loop_join_oracle(&l, &r, "key").unwrap();
        assert_eq!(out.relation.row_count(), oracle.row_count());
        assert_eq!(multiset_digest(&out.relation), multiset_digest(&oracle));
        assert_eq!(out.spill.temp_bytes_written, a.disk_usage().unwrap());
    }

    #[test]
    fn forced_build_side_same_result() {
        let (_root, mut a) = arena();
        let l = generate_relation(&GenSpec::uniform(8000, 50, 12, 5)).unwrap();
        let r = generate_relation(&GenSpec::uniform(500, 50, 12, 6)).unwrap();
        let budget = MemoryBudget::kib(64).unwrap();
        let x = hash_join_row(&l, &r, &JoinSpec::on("key").with_build_side(BuildSide::Left), budget, &mut a).unwrap();
        let y = hash_join_row(&l, &r, &JoinSpec::on("key").with_build_side(BuildSide::Right), budget, &mut a).unwrap();
        assert_eq!(multiset_digest(&x.relation), multiset_digest(&y.relation));
        assert!(x.spill.temp_blocks_written > 0);
    }

    #[test]
    fn single_hot_key_is_budget_too_small() {
        let (_root, mut a) = arena();
        let l = generate_relation(&GenSpec::uniform(5000, 1, 32, 1)).unwrap();
        let r = generate_relation(&GenSpec::uniform(5000, 1, 32, 2)).unwrap();
        let err = hash_join_row(&l, &r, &JoinSpec::on("key"), MemoryBudget::kib(64).unwrap(), &mut a).unwrap_err();
        assert!(matches!(err, Error::BudgetTooSmall { depth: MAX_RECURSION, .. }), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let (_root, mut a) = arena();
        let l = generate_relation(&GenSpec::uniform(5, 3, 1, 1)).unwrap();
        assert!(matches!(
            hash_join_row(&l, &l, &JoinSpec::on("nope"), MemoryBudget::kib(64).unwrap(), &mut a),
            Err(Error::UnknownAttribute(_))
        ));
        assert!(matches!(
            hash_join_row(&l, &l, &JoinSpec::on("payload"), MemoryBudget::kib(64).unwrap(), &mut a),
            Err(Error::TypeMismatch { .. })
        ));
    }

    #[test]
    fn empty_side() {
        let (_root, mut a) = arena();
        let l = generate_relation(&GenSpec::uniform(100, 3, 1, 1)).unwrap();
        let r = generate_relation(&GenSpec::uniform(0, 3, 1, 1)).unwrap();
        let out = hash_join_row(&l, &r, &JoinSpec::on("key"), MemoryBudget::kib(64).unwrap(), &mut a).unwrap();
        assert_eq!(out.relation.row_count(), 0);
    }
}
