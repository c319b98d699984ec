//! Run a config grid, then write the sweep CSV and per-figure series.

use std::fs::File;

use tensorlab::bench::config::parse_config;
use tensorlab::bench::report::write_figures;
use tensorlab::bench::{sweep_with, write_sweep_csv};
use tensorlab::Result;

const GRID: &str = "
repetitions = 5
warmup = 1

[join]
operation = join
n = 10000, 50000, 200000
budget = 1MB, 64MB
policy = force_row, force_tensor, auto
";

fn main() -> Result<()> {
    let path = std::env::args().nth(1);
    let text = match &path {
        Some(p) => std::fs::read_to_string(p)?,
        None => GRID.to_string(),
    };
    let grid = parse_config(&text)?;
    let rows = sweep_with(&grid, |i, r| {
        println!("{:>3}/{} {} n={} budget={} {} -> {} p99={:.4}s", i + 1, grid.len(), r.operation, r.n_left, r.budget_bytes, r.policy, r.path_taken, r.p99_s)
    });
    let out = std::path::Path::new("target/figure_sweep");
    std::fs::create_dir_all(out)?;
    write_sweep_csv(File::create(out.join("sweep.csv"))?, &rows)?;
    for f in write_figures(&rows, out)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
