//! Fit the linear-plus-residual cost model on measured row-path joins.

use tensorlab::bench::{execute_once, Inputs};
use tensorlab::{fit_regime, predict, ExperimentConfig, Measurement, MemoryBudget, Path, Policy, Result};

fn main() -> Result<()> {
    let budget = MemoryBudget::mib(1)?;
    let tmp = std::env::temp_dir();
    let mut points = Vec::new();
    for n in [1_000, 2_000, 4_000, 6_000, 8_000, 20_000, 60_000, 150_000, 300_000] {
        let config = ExperimentConfig::join(n, budget, Policy::ForceRow);
        let inputs = Inputs::generate(&config)?;
        execute_once(&inputs, Path::Row, budget, &tmp)?;
        let mut times = Vec::new();
        let mut blocks = 0;
        for _ in 0..5 {
            let e = execute_once(&inputs, Path::Row, budget, &tmp)?;
            times.push(e.seconds);
            blocks = e.spill.temp_blocks_written;
        }
        points.push(Measurement::new(n as u64, budget.bytes(), Path::Row, times, blocks)?);
    }
    let fit = fit_regime(&points)?;
    println!(
        "T(N) = {:.3e} * N + {:.3e}; spills from N = {:?}; residual std {:.2e}",
        fit.linear_coeff, fit.intercept, fit.spill_threshold_rows, fit.residual_std
    );
    println!("{:>8} {:>10} {:>10} {:>10}", "n", "measured", "linear", "alpha");
    for m in &points {
        println!("{:>8} {:>10.5} {:>10.5} {:>10.5}", m.n, m.median(), fit.linear(m.n), fit.alpha(m.n));
    }
    println!("extrapolated T(600000) = {:.4}s", predict(&fit, 600_000));
    Ok(())
}
