//! Generate relations and compare them by multiset and sequence digests.

use tensorlab::bench::relfile::{load_relation, save_relation};
use tensorlab::{generate_relation, multiset_digest, sequence_digest, GenSpec, Result, SortSpec};

fn main() -> Result<()> {
    let uniform = generate_relation(&GenSpec::calibration(50_000, 7))?;
    let skewed = generate_relation(&GenSpec::zipf(50_000, 10_000, 1.1, 92, 7))?;
    println!("uniform: {} rows, {} bytes, digest {}", uniform.row_count(), uniform.serialized_bytes(), multiset_digest(&uniform));
    println!("zipf:    {} rows, {} bytes, digest {}", skewed.row_count(), skewed.serialized_bytes(), multiset_digest(&skewed));

    // Same rows in another order: multiset digest holds, sequence digest moves.
    let shuffled = tensorlab::tensor_sort(&uniform, &SortSpec::ascending(&["key"])?)?.relation;
    assert_eq!(multiset_digest(&shuffled), multiset_digest(&uniform));
    assert_ne!(sequence_digest(&shuffled), sequence_digest(&uniform));

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("uniform.rel");
    save_relation(&path, &uniform)?;
    let back = load_relation(&path)?;
    assert_eq!(back, uniform);
    println!("round-tripped through {}", path.display());
    Ok(())
}
