//! Path selection from runtime signals, and how thresholds move it.

use tensorlab::{generate_relation, select_path, select_path_with, GenSpec, MemoryBudget, Policy, Result, RuntimeSignals, SelectorConfig};

fn main() -> Result<()> {
    println!("{:>9} {:>7} {:>8} {:>14}", "n", "budget", "path", "reason");
    for n in [1_000, 10_000, 100_000, 300_000, 1_000_000] {
        let left = generate_relation(&GenSpec::calibration(n, 1))?;
        let right = generate_relation(&GenSpec::calibration(n, 2))?;
        for budget in ["1MB", "64MB"] {
            let b: MemoryBudget = budget.parse()?;
            let signals = RuntimeSignals::for_join(&left, &right, "key", b, None)?;
            let c = select_path(&signals, Policy::Auto);
            println!("{n:>9} {budget:>7} {:>8} {:>14}", c.path, c.reason);
        }
    }

    let rel = generate_relation(&GenSpec::calibration(40_000, 1))?;
    let signals = RuntimeSignals::for_sort(&rel, MemoryBudget::mib(1)?);
    println!("sort 40000 @1MB, defaults:        {}", select_path(&signals, Policy::Auto).reason);
    let strict = SelectorConfig { theta_small: 1_000, ..SelectorConfig::default() };
    println!("sort 40000 @1MB, theta_small=1000: {}", select_path_with(&signals, Policy::Auto, &strict).reason);
    println!("forced:                            {}", select_path(&signals, Policy::ForceRow).reason);
    Ok(())
}
