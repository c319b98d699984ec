//! External merge sort: run generation and multi-pass merging.

use tensorlab::{comparison_sort_oracle, external_sort_row, MemoryBudget, Result, SortSpec, TempArena};
use tensorlab::generate::generate_wide_relation;
use tensorlab::GenSpec;

fn main() -> Result<()> {
    let rel = generate_wide_relation(&GenSpec::uniform(300_000, 1_000, 24, 3), &["a1"])?;
    let spec: SortSpec = "key:desc,a1".parse()?;
    println!("sorting {} rows of {} bytes by {spec}", rel.row_count(), rel.schema().row_width());
    for budget in ["64MB", "1MB", "64KB"] {
        let dir = tempfile::tempdir()?;
        let mut arena = TempArena::create(dir.path())?;
        let t = std::time::Instant::now();
        let out = external_sort_row(&rel, &spec, budget.parse::<MemoryBudget>()?, &mut arena)?;
        let secs = t.elapsed().as_secs_f64();
        arena.close()?;
        println!(
            "{budget:>6}: {:.3}s, {} runs, {} temp blocks ({:.1} MB)",
            secs,
            out.spill.sort_runs,
            out.spill.temp_blocks_written,
            out.spill.temp_mb()
        );
    }
    let dir = tempfile::tempdir()?;
    let mut arena = TempArena::create(dir.path())?;
    let small = rel.take(&(0..20_000).collect::<Vec<u32>>());
    let out = external_sort_row(&small, &spec, MemoryBudget::kib(64)?, &mut arena)?;
    assert_eq!(out.relation, comparison_sort_oracle(&small, &spec)?);
    println!("spilled 64KB sort of 20000 rows matches the comparison sort");
    Ok(())
}
