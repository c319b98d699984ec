//! Row-path hash join under shrinking budgets, showing when it spills.

use tensorlab::{generate_relation, hash_join_row, multiset_digest, GenSpec, JoinSpec, MemoryBudget, Result, TempArena};

fn main() -> Result<()> {
    let n = 200_000;
    let left = generate_relation(&GenSpec::calibration(n, 1))?;
    let right = generate_relation(&GenSpec::calibration(n, 2))?;
    let spec = JoinSpec::on("key");
    println!("{n} x {n} rows, build side {} bytes", right.serialized_bytes());
    println!("{:>8} {:>10} {:>12} {:>9} {:>7} {:>12}", "budget", "rows", "temp_blocks", "temp_mb", "fanout", "peak_build");

    let mut reference = None;
    for budget in ["64MB", "8MB", "1MB", "256KB", "64KB"] {
        let b: MemoryBudget = budget.parse()?;
        let dir = tempfile::tempdir()?;
        let mut arena = TempArena::create(dir.path())?;
        let out = hash_join_row(&left, &right, &spec, b, &mut arena)?;
        arena.close()?;
        let digest = multiset_digest(&out.relation);
        assert_eq!(*reference.get_or_insert(digest), digest, "result must not depend on the budget");
        println!(
            "{budget:>8} {:>10} {:>12} {:>9.2} {:>7} {:>12}",
            out.relation.row_count(),
            out.spill.temp_blocks_written,
            out.spill.temp_mb(),
            out.max_fanout,
            out.peak_build_bytes,
        );
        assert!(out.peak_build_bytes <= b.bytes());
    }
    Ok(())
}
