//! Multi-key sort on both paths with mixed directions.

use tensorlab::generate::generate_wide_relation;
use tensorlab::{external_sort_row, sequence_digest, tensor_sort, GenSpec, MemoryBudget, Result, SortSpec, TempArena};

fn main() -> Result<()> {
    let rel = generate_wide_relation(&GenSpec::zipf(500_000, 5_000, 1.0, 16, 11), &["a1", "a2"])?;
    for keys in ["key", "key,a1:desc", "a2:desc,key,a1"] {
        let spec: SortSpec = keys.parse()?;
        let t = std::time::Instant::now();
        let tensor = tensor_sort(&rel, &spec)?;
        let tensor_s = t.elapsed().as_secs_f64();

        let dir = tempfile::tempdir()?;
        let mut arena = TempArena::create(dir.path())?;
        let t = std::time::Instant::now();
        let row = external_sort_row(&rel, &spec, MemoryBudget::mib(1)?, &mut arena)?;
        let row_s = t.elapsed().as_secs_f64();
        arena.close()?;

        assert_eq!(sequence_digest(&tensor.relation), sequence_digest(&row.relation));
        println!(
            "{keys:<16} tensor {tensor_s:.3}s | row@1MB {row_s:.3}s, {:.1} MB spilled",
            row.spill.temp_mb()
        );
    }
    Ok(())
}
