//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 4 7`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path as FsPath;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensorlab::bench::{run_experiment_on, BenchReport, Inputs};
use tensorlab::generate::generate_wide_relation;
use tensorlab::spill::BLOCK_SIZE;
use tensorlab::stats::percentile;
use tensorlab::{
    comparison_sort_oracle, dispersion, external_sort_row, fit_regime, generate_relation, hash_join_row,
    multiset_digest, nested_loop_join_oracle, predict, tensor_join, tensor_sort, to_tensor, ExperimentConfig, GenSpec,
    JoinSpec, Measurement, MemoryBudget, Path, Policy, SortSpec, TempArena,
};

#[global_allocator]
static GLOBAL: tikv_jemallocator::Jemalloc = tikv_jemallocator::Jemalloc;

#[allow(non_upper_case_globals)]
#[export_name = "_rjem_malloc_conf"]
pub static malloc_conf: &[u8] = b"oversize_threshold:0,dirty_decay_ms:-1,muzzy_decay_ms:-1,thp:always\0";

const MIB: u64 = 1 << 20;

/// Tensor executions seen by any criterion, and how many touched temp files.
#[derive(Default)]
struct TensorTally {
    runs: u64,
    spilled: u64,
}

impl TensorTally {
    fn record(&mut self, temp_blocks: u64) {
        self.runs += 1;
        if temp_blocks != 0 {
            self.spilled += 1;
        }
    }

    fn report(&mut self, r: &BenchReport) {
        if r.choice.path == Path::Tensor {
            for _ in 0..r.latency.samples().len() {
                self.record(r.spill.temp_blocks_written);
            }
        }
    }
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// One verdict from labelled parts; passes only if every part does.
fn combine(labels: &[&str], parts: Vec<Verdict>) -> Verdict {
    let detail: Vec<String> = labels
        .iter()
        .zip(&parts)
        .map(|(l, v)| format!("({l}) {} {}", if v.pass { "ok" } else { "FAILED" }, v.detail))
        .collect();
    verdict(parts.iter().all(|v| v.pass), detail.join(" | "))
}

fn log(msg: impl AsRef<str>) {
    eprintln!("  {}", msg.as_ref());
}

fn budget(bytes: u64) -> MemoryBudget {
    MemoryBudget::new(bytes).unwrap()
}

fn temp_root() -> std::path::PathBuf {
    ExperimentConfig::join(1, budget(MIB), Policy::Auto).temp_root()
}

fn timed(inputs: &Inputs, n: usize, m: u64, policy: Policy, reps: usize, warmup: usize, tally: &mut TensorTally) -> BenchReport {
    let config = ExperimentConfig::join(n, budget(m), policy).with_repetitions(reps, warmup);
    let r = run_experiment_on(&config, inputs, Some(n.max(1) as u64)).unwrap();
    tally.report(&r);
    r
}

fn join_inputs(n: usize) -> Inputs {
    Inputs::generate(&ExperimentConfig::join(n, budget(MIB), Policy::Auto)).unwrap()
}

fn criterion1(tally: &mut TensorTally) -> Verdict {
    let start = Instant::now();
    let budgets = [64 << 10, 256 << 10, 64 * MIB];
    let sort_attrs = ["key", "a1", "a2", "payload"];
    let mut failures = Vec::new();
    let (mut joins, mut sorts) = (0, 0);
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0000 + seed);
        let (nl, nr) = (rng.random_range(0..=20_000), rng.random_range(0..=20_000));
        let domain = rng.random_range(5_000..=20_000);
        let width = rng.random_range(0..=48);
        let gen = |n, s| {
            if seed % 2 == 0 {
                GenSpec::uniform(n, domain, width, s)
            } else {
                GenSpec::zipf(n, domain, 0.75, width, s)
            }
        };
        let left = generate_relation(&gen(nl, seed * 2)).unwrap();
        let right = generate_relation(&gen(nr, seed * 2 + 1)).unwrap();
        let oracle = multiset_digest(&nested_loop_join_oracle(&left, &right, "key").unwrap());
        let tensor = tensor_join(&to_tensor(&left, "key").unwrap(), &to_tensor(&right, "key").unwrap()).unwrap();
        tally.record(tensor.spill.temp_blocks_written);
        if multiset_digest(&tensor.relation) != oracle {
            failures.push(format!("seed {seed}: tensor join"));
        }
        for &b in &budgets {
            let dir = tempfile::tempdir().unwrap();
            let mut arena = TempArena::create(dir.path()).unwrap();
            match hash_join_row(&left, &right, &JoinSpec::on("key"), budget(b), &mut arena) {
                Ok(out) if multiset_digest(&out.relation) == oracle => {}
                Ok(_) => failures.push(format!("seed {seed}: row join @{b}")),
                Err(e) => failures.push(format!("seed {seed}: row join @{b}: {e}")),
            }
            joins += 1;
        }

        let n = rng.random_range(0..=20_000);
        let rel = generate_wide_relation(&gen(n, seed + 1000), &["a1", "a2"]).unwrap();
        let nkeys = rng.random_range(1..=3);
        let mut picked: Vec<&str> = Vec::new();
        while picked.len() < nkeys {
            let a = sort_attrs[rng.random_range(0..sort_attrs.len())];
            if !picked.contains(&a) {
                picked.push(a);
            }
        }
        let text: Vec<String> = picked
            .iter()
            .map(|a| if rng.random_bool(0.5) { format!("{a}:desc") } else { a.to_string() })
            .collect();
        let spec: SortSpec = text.join(",").parse().unwrap();
        let expected = comparison_sort_oracle(&rel, &spec).unwrap();
        let tensor = tensor_sort(&rel, &spec).unwrap();
        tally.record(tensor.spill.temp_blocks_written);
        if tensor.relation != expected {
            failures.push(format!("seed {seed}: tensor sort {spec}"));
        }
        for &b in &budgets {
            let dir = tempfile::tempdir().unwrap();
            let mut arena = TempArena::create(dir.path()).unwrap();
            match external_sort_row(&rel, &spec, budget(b), &mut arena) {
                Ok(out) if out.relation == expected => {}
                Ok(_) => failures.push(format!("seed {seed}: row sort {spec} @{b}")),
                Err(e) => failures.push(format!("seed {seed}: row sort {spec} @{b}: {e}")),
            }
            sorts += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    for f in failures.iter().take(10) {
        log(f);
    }
    verdict(
        failures.is_empty() && secs < 300.0,
        format!("{joins} row joins, {sorts} row sorts, 100 tensor ops over 50 seeds; {} mismatches; {secs:.1}s", failures.len()),
    )
}

fn criterion3(tally: &mut TensorTally) -> Verdict {
    let start = Instant::now();
    let inputs = join_inputs(1_000_000);
    let r = timed(&inputs, 1_000_000, MIB, Policy::ForceRow, 1, 0, tally);
    let secs = start.elapsed().as_secs_f64();
    let (mb, blocks) = (r.temp_mb(), r.spill.temp_blocks_written);
    verdict(
        mb >= 100.0 && blocks > 10_000 && secs <= 300.0,
        format!("temp_mb {mb:.2} (>= 100), temp_blocks {blocks} (> 10000), {} partition passes, {secs:.1}s", r.spill.partition_passes),
    )
}

/// Per-path measurements over the regime grid at 1 MiB, shared by
/// criteria 4 and 7.
struct RegimeGrid {
    row: Vec<Measurement>,
    tensor: Vec<Measurement>,
}

const SIZE_GRID: [usize; 4] = [10_000, 100_000, 300_000, 1_000_000];
/// Zero-spill points for the linear baseline plus one extra spilling point.
const EXTRA_GRID: [usize; 4] = [2_500, 5_000, 7_500, 30_000];

fn measure_regime_grid(tally: &mut TensorTally) -> RegimeGrid {
    let mut ns: Vec<usize> = SIZE_GRID.iter().chain(EXTRA_GRID.iter()).copied().collect();
    ns.sort();
    let mut grid = RegimeGrid { row: Vec::new(), tensor: Vec::new() };
    for n in ns {
        let inputs = join_inputs(n);
        for (policy, path) in [(Policy::ForceRow, Path::Row), (Policy::ForceTensor, Path::Tensor)] {
            let reps = if n <= 10_000 { 30 } else { 10 };
            let r = timed(&inputs, n, MIB, policy, reps, 3, tally);
            log(format!(
                "n={n:>8} {path:<6} p50 {:.6}s  {:>6.1} ns/row  temp_blocks {}",
                r.latency.p50,
                r.latency.p50 * 1e9 / n as f64,
                r.spill.temp_blocks_written
            ));
            let m = Measurement::new(n as u64, MIB, path, r.latency.samples().to_vec(), r.spill.temp_blocks_written).unwrap();
            match path {
                Path::Row => grid.row.push(m),
                Path::Tensor => grid.tensor.push(m),
            }
        }
    }
    grid
}

fn per_row(ms: &[Measurement], n: usize) -> f64 {
    let m = ms.iter().find(|m| m.n == n as u64).unwrap();
    m.median() / n as f64
}

fn criterion4(grid: &RegimeGrid) -> Vec<Verdict> {
    let ratio_a = per_row(&grid.row, 1_000_000) / per_row(&grid.row, 10_000);
    let tensor: Vec<f64> = SIZE_GRID.iter().map(|&n| per_row(&grid.tensor, n)).collect();
    let ratio_b = tensor.iter().cloned().fold(f64::MIN, f64::max) / tensor.iter().cloned().fold(f64::MAX, f64::min);
    let c = match fit_regime(&grid.row) {
        Ok(fit) => {
            let curve = &fit.alpha_curve;
            let increasing = !curve.is_empty() && curve.windows(2).all(|w| w[1].1 > w[0].1);
            let shown: Vec<String> = curve.iter().map(|(n, a)| format!("{n}:{a:.4}")).collect();
            verdict(increasing, format!("alpha_curve [{}], N* = {:?}", shown.join(", "), fit.spill_threshold_rows))
        }
        Err(e) => verdict(false, format!("fit failed: {e}")),
    };
    vec![
        verdict(ratio_a >= 2.0, format!("row per-row time 1e6 / 1e4 = {ratio_a:.2} (>= 2)")),
        verdict(
            ratio_b <= 1.5,
            format!(
                "tensor per-row max/min = {ratio_b:.2} (<= 1.5); ns/row {:?}",
                tensor.iter().map(|t| (t * 1e9 * 10.0).round() / 10.0).collect::<Vec<_>>()
            ),
        ),
        c,
    ]
}

fn criterion5(tally: &mut TensorTally) -> Verdict {
    let n = 1_000_000;
    let inputs = join_inputs(n);
    let row = timed(&inputs, n, MIB, Policy::ForceRow, 100, 3, tally);
    let tensor = timed(&inputs, n, MIB, Policy::ForceTensor, 100, 3, tally);
    let dm = |r: &BenchReport| {
        let m = Measurement::new(n as u64, MIB, r.choice.path, r.latency.samples().to_vec(), r.spill.temp_blocks_written).unwrap();
        dispersion(&m).unwrap()
    };
    let (dr, dt) = (dm(&row), dm(&tensor));
    let ratio = row.latency.p99 / tensor.latency.p99;
    for (name, r) in [("row", &row), ("tensor", &tensor)] {
        let l = &r.latency;
        log(format!("{name:<6} p50 {:.4}s p95 {:.4}s p99 {:.4}s max {:.4}s", l.p50, l.p95, l.p99, l.max));
    }
    verdict(
        ratio >= 2.0 && dr > dt,
        format!("P99 row/tensor = {ratio:.2} (>= 2); P99/P50 row {dr:.3} vs tensor {dt:.3} (row must exceed)"),
    )
}

fn criterion6(tally: &mut TensorTally) -> Verdict {
    let mut failures = Vec::new();
    let mut cells = 0;
    for n in SIZE_GRID {
        let inputs = join_inputs(n);
        for m in [MIB, 64 * MIB] {
            let reps = if n <= 100_000 { 20 } else { 10 };
            let row = timed(&inputs, n, m, Policy::ForceRow, reps, 3, tally);
            let tensor = timed(&inputs, n, m, Policy::ForceTensor, reps, 3, tally);
            let auto = timed(&inputs, n, m, Policy::Auto, reps, 3, tally);
            cells += 3;
            let best = row.latency.p50.min(tensor.latency.p50);
            let ratio = auto.latency.p50 / best;
            let heavy_spill = row.spill.temp_bytes_written > 10 * m;
            let ok_time = ratio <= 1.2;
            let ok_choice = !heavy_spill || auto.choice.path == Path::Tensor;
            log(format!(
                "n={n:>8} M={:>2}MiB row {:.5}s tensor {:.5}s auto {:.5}s [{} {}] auto/min {ratio:.2}{}",
                m / MIB,
                row.latency.p50,
                tensor.latency.p50,
                auto.latency.p50,
                auto.choice.path,
                auto.choice.reason,
                if heavy_spill { " (row spills > 10x M)" } else { "" }
            ));
            if !ok_time {
                failures.push(format!("n={n} M={}MiB auto/min {ratio:.2}", m / MIB));
            }
            if !ok_choice {
                failures.push(format!("n={n} M={}MiB heavy spill but auto chose {}", m / MIB, auto.choice.path));
            }
        }
    }
    verdict(failures.is_empty(), format!("{cells} cells; violations: [{}]", failures.join("; ")))
}

fn criterion7(grid: &RegimeGrid) -> Vec<Verdict> {
    // Noise-free a*n + c*max(0, n - N*)^2.
    let (a, c, threshold) = (2.5e-7, 4e-13, 100_000u64);
    let ns: Vec<u64> = (1..=20).map(|i| i * 25_000).collect();
    let synthetic: Vec<Measurement> = ns
        .iter()
        .map(|&n| {
            let over = n.saturating_sub(threshold) as f64;
            let t = a * n as f64 + c * over * over;
            Measurement::new(n, MIB, Path::Row, vec![t], u64::from(n > threshold)).unwrap()
        })
        .collect();
    let fit = fit_regime(&synthetic).unwrap();
    let worst = fit
        .alpha_curve
        .iter()
        .map(|&(n, alpha)| {
            let over = (n - threshold) as f64;
            ((alpha - c * over * over) / (c * over * over)).abs()
        })
        .fold(0.0, f64::max);
    let synth = verdict(
        worst <= 0.05 && fit.alpha_curve.len() == 16,
        format!("{} alpha points, max relative error {worst:.2e} (<= 5%)", fit.alpha_curve.len()),
    );

    let mut errors = Vec::new();
    for i in 0..grid.row.len() {
        let rest: Vec<Measurement> = grid.row.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, m)| m.clone()).collect();
        let held = &grid.row[i];
        match fit_regime(&rest) {
            Ok(f) => {
                let err = (predict(&f, held.n) - held.median()).abs() / held.median();
                errors.push((held.n, held.spilled(), Some(err)));
            }
            Err(_) => errors.push((held.n, held.spilled(), None)),
        }
    }
    let shown: Vec<String> = errors
        .iter()
        .map(|(n, s, e)| match e {
            Some(e) => format!("{n}{}:{:.0}%", if *s { "s" } else { "" }, e * 100.0),
            None => format!("{n}:unfit"),
        })
        .collect();
    let loo_ok = errors.iter().all(|(_, _, e)| matches!(e, Some(e) if *e <= 0.30));
    let loo = verdict(loo_ok, format!("leave-one-out error per point (s = spilling) [{}] (<= 30%)", shown.join(", ")));
    vec![synth, loo]
}

/// Nearest-rank in exact integer arithmetic: q = k / 1000 percent, so the
/// rank is ceil(k * n / 100000).
fn rank_oracle(sorted: &[f64], k: u64) -> f64 {
    let n = sorted.len() as u64;
    let rank = (k * n).div_ceil(100_000).max(1);
    sorted[(rank - 1) as usize]
}

fn files_size(dir: &FsPath) -> u64 {
    fs::read_dir(dir).unwrap().map(|e| fs::metadata(e.unwrap().path()).unwrap().len()).sum()
}

fn criterion8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x8888);
    let mut pct_fail = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=500);
        let samples: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0f64)).collect();
        let k = rng.random_range(1..=100_000u64);
        let mut sorted = samples.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if percentile(&samples, k as f64 / 1000.0).unwrap() != rank_oracle(&sorted, k) {
            pct_fail += 1;
        }
    }

    let mut acct_fail = Vec::new();
    let root = temp_root();
    for run in 0..20u64 {
        let n = rng.random_range(5_000..60_000);
        let width = rng.random_range(40..250);
        let rel = generate_relation(&GenSpec::uniform(n, rng.random_range(100..60_000), width, run)).unwrap();
        // Every run must spill: smallest input is 240 KB, budget stays under a third.
        let cap = ((n as u64 * (width as u64 + 8)) / 3).min(512 << 10);
        let b = budget(rng.random_range(64 << 10..=cap.max(64 << 10)));
        let mut arena = TempArena::create(&root).unwrap();
        let out = if run % 2 == 0 {
            let other = generate_relation(&GenSpec::uniform(n, 60_000, width, run + 500)).unwrap();
            hash_join_row(&rel, &other, &JoinSpec::on("key"), b, &mut arena).unwrap()
        } else {
            external_sort_row(&rel, &SortSpec::ascending(&["key"]).unwrap(), b, &mut arena).unwrap()
        };
        let on_disk = files_size(arena.path());
        let s = out.spill;
        if s.temp_bytes_written != on_disk || s.temp_blocks_written * BLOCK_SIZE as u64 != on_disk || s.is_zero() {
            acct_fail.push(format!("run {run}: stats {} B / {} blocks vs {on_disk} B on disk", s.temp_bytes_written, s.temp_blocks_written));
        }
        arena.close().unwrap();
    }
    for f in &acct_fail {
        log(f);
    }
    verdict(
        pct_fail == 0 && acct_fail.is_empty(),
        format!("percentile mismatches {pct_fail}/1000; spill accounting mismatches {}/20", acct_fail.len()),
    )
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |c: u32| wanted.is_empty() || wanted.contains(&c);
    let mut tally = TensorTally::default();
    let mut results: BTreeMap<String, Verdict> = BTreeMap::new();
    let mut put = |key: &str, v: Verdict| {
        eprintln!("[{key}] {} {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.insert(key.to_string(), v);
    };

    if run(1) {
        eprintln!("criterion 1: oracle equivalence");
        put("1", criterion1(&mut tally));
    }
    if run(3) {
        eprintln!("criterion 3: spill regime at N=1e6, M=1MiB");
        put("3", criterion3(&mut tally));
    }
    let grid = (run(4) || run(7)).then(|| {
        eprintln!("regime grid at M=1MiB");
        measure_regime_grid(&mut tally)
    });
    if run(4) {
        put("4", combine(&["a", "b", "c"], criterion4(grid.as_ref().unwrap())));
    }
    if run(5) {
        eprintln!("criterion 5: tail latency at N=1e6, M=1MiB, 100 repetitions");
        put("5", criterion5(&mut tally));
    }
    if run(6) {
        eprintln!("criterion 6: selector over the 24-cell grid");
        put("6", criterion6(&mut tally));
    }
    if run(7) {
        put("7", combine(&["a", "b"], criterion7(grid.as_ref().unwrap())));
    }
    if run(8) {
        eprintln!("criterion 8: percentile and accounting oracles");
        put("8", criterion8());
    }
    if run(2) {
        put(
            "2",
            verdict(
                tally.spilled == 0 && tally.runs > 0,
                format!("{} tensor executions, {} with temp blocks", tally.runs, tally.spilled),
            ),
        );
    }

    println!("acceptance summary");
    let mut failed = 0;
    for (key, v) in &results {
        failed += usize::from(!v.pass);
        println!("criterion {key} {}  {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
