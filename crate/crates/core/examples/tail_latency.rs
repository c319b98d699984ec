//! Latency distributions of both paths on a spilling join.

use tensorlab::{run_experiment, ExperimentConfig, MemoryBudget, Policy, Result};

fn main() -> Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(300_000);
    let budget = MemoryBudget::mib(1)?;
    for policy in [Policy::ForceRow, Policy::ForceTensor] {
        let r = run_experiment(&ExperimentConfig::join(n, budget, policy).with_repetitions(30, 3))?;
        let l = &r.latency;
        println!(
            "{:<7} p50 {:.4}s  p95 {:.4}s  p99 {:.4}s  max {:.4}s  p99/p50 {:.2}  temp {:.1} MB",
            r.choice.path,
            l.p50,
            l.p95,
            l.p99,
            l.max,
            l.p99 / l.p50,
            r.temp_mb()
        );
    }
    Ok(())
}
