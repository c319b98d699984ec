//! Command-line front end: `gen`, `join`, `sort`, `bench`, `fit`, `report`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::config::{parse_config, parse_distribution};
use crate::bench::relfile::{load_relation, save_relation};
use crate::bench::report::{fit_sweep, write_figures, write_fit_csv};
use crate::bench::{
    read_sweep_csv, run_experiment, run_experiment_on, sweep_with, write_sweep_csv, BenchReport, ExperimentConfig,
    Inputs, SweepRow, DEFAULT_REPETITIONS, DEFAULT_WARMUP,
};
use crate::error::{Error, Result};
use crate::generate::{generate_relation, GenSpec, KeyDistribution, CALIBRATION_PAYLOAD_WIDTH};
use crate::order::SortSpec;
use crate::row::MemoryBudget;
use crate::selector::{Operation, Policy, SelectorConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tensorlab", version, about = "Row vs. tensor execution under memory budgets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a relation and write it to a file.
    Gen {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a timed equi-join.
    Join {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Rows on the right side (defaults to --n).
        #[arg(long)]
        n_right: Option<usize>,
        #[arg(long, requires = "right")]
        left: Option<PathBuf>,
        #[arg(long, requires = "left")]
        right: Option<PathBuf>,
    },
    /// Run a timed multi-key sort.
    Sort {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated keys, each optionally suffixed `:desc`.
        #[arg(long, default_value = "key")]
        keys: String,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run every cell of a config grid and write the sweep CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit regime models to a sweep CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Output CSV (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write per-figure CSV series from one or more sweep CSVs.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Distinct key values (defaults to --n).
    #[arg(long)]
    key_domain: Option<u64>,
    #[arg(long, default_value_t = CALIBRATION_PAYLOAD_WIDTH)]
    payload_width: usize,
    /// `uniform` or `zipf:<s>`.
    #[arg(long, default_value = "uniform", value_parser = parse_distribution)]
    distribution: KeyDistribution,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl DataArgs {
    fn spec(&self, n: usize, seed: u64) -> GenSpec {
        GenSpec {
            n,
            key_domain: self.key_domain.unwrap_or(self.n.max(1) as u64),
            distribution: self.distribution,
            payload_width: self.payload_width,
            seed,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value = "64MB")]
    budget: MemoryBudget,
    #[arg(long, default_value = "auto")]
    policy: Policy,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    reps: usize,
    #[arg(long, default_value_t = DEFAULT_WARMUP)]
    warmup: usize,
    #[arg(long)]
    temp_dir: Option<PathBuf>,
    #[arg(long, default_value_t = SelectorConfig::default().theta_fit)]
    theta_fit: f64,
    #[arg(long, default_value_t = SelectorConfig::default().theta_small)]
    theta_small: u64,
    /// Also write the result as a one-row sweep CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self, operation: Operation, left: GenSpec, right: GenSpec, sort_spec: Option<SortSpec>) -> ExperimentConfig {
        ExperimentConfig {
            operation,
            gen_left: left,
            gen_right: right,
            sort_spec,
            budget: self.budget,
            policy: self.policy,
            repetitions: self.reps,
            warmup: self.warmup,
            temp_dir: self.temp_dir.clone(),
            selector: SelectorConfig {
                theta_fit: self.theta_fit,
                theta_small: self.theta_small,
            },
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILED
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Gen { data, out: path } => {
            let rel = generate_relation(&data.spec(data.n, data.seed))?;
            save_relation(&path, &rel)?;
            writeln!(out, "wrote {} rows ({} bytes serialized) to {}", rel.row_count(), rel.serialized_bytes(), path.display())?;
        }
        Command::Join { data, run, n_right, left, right } => {
            let config = run.config(
                Operation::Join,
                data.spec(data.n, data.seed),
                data.spec(n_right.unwrap_or(data.n), data.seed + 1),
                None,
            );
            let report = match (left, right) {
                (Some(l), Some(r)) => {
                    let inputs = Inputs::Join { left: load_relation(l)?, right: load_relation(r)? };
                    run_experiment_on(&config, &inputs, None)?
                }
                _ => run_experiment(&config)?,
            };
            summarize(&mut out, &report, &run)?;
        }
        Command::Sort { data, run, keys, input } => {
            let spec: SortSpec = keys.parse()?;
            let config = run.config(Operation::Sort, data.spec(data.n, data.seed), data.spec(0, data.seed), Some(spec.clone()));
            let report = match input {
                Some(path) => run_experiment_on(&config, &Inputs::Sort { rel: load_relation(path)?, spec }, None)?,
                None => run_experiment(&config)?,
            };
            summarize(&mut out, &report, &run)?;
        }
        Command::Bench { config, out: path } => {
            let text = std::fs::read_to_string(&config)?;
            let grid = parse_config(&text)?;
            let total = grid.len();
            let rows = sweep_with(&grid, |i, row| {
                eprintln!(
                    "[{}/{}] {} n={} budget={} policy={} -> {}",
                    i + 1,
                    total,
                    row.operation,
                    row.n_left,
                    row.budget_bytes,
                    row.policy,
                    if row.is_error() { &row.digest_hex } else { &row.path_taken },
                );
            });
            write_sweep_csv(BufWriter::new(File::create(&path)?), &rows)?;
            let failed = rows.iter().filter(|r| r.is_error()).count();
            writeln!(out, "wrote {} rows to {} ({} failed)", rows.len(), path.display(), failed)?;
            if failed > 0 {
                return Ok(EXIT_FAILED);
            }
        }
        Command::Fit { input, out: path } => {
            let rows = read_sweep_csv(BufReader::new(File::open(&input)?))?;
            let fits = fit_sweep(&rows);
            if fits.iter().all(|(_, f)| f.is_err()) {
                for (k, fit) in &fits {
                    if let Err(e) = fit {
                        eprintln!("{} budget={} path={}: {e}", k.operation, k.budget_bytes, k.path);
                    }
                }
                return Err(Error::InsufficientData("no series could be fitted".into()));
            }
            for (k, fit) in &fits {
                if let Err(e) = fit {
                    eprintln!("skipping {} budget={} path={}: {e}", k.operation, k.budget_bytes, k.path);
                }
            }
            match path {
                Some(p) => write_fit_csv(BufWriter::new(File::create(p)?), &fits)?,
                None => write_fit_csv(&mut out, &fits)?,
            }
        }
        Command::Report { inputs, out_dir } => {
            let mut rows: Vec<SweepRow> = Vec::new();
            for p in &inputs {
                rows.extend(read_sweep_csv(BufReader::new(File::open(p)?))?);
            }
            for f in write_figures(&rows, &out_dir)? {
                writeln!(out, "{}", f.display())?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn summarize(out: &mut impl Write, r: &BenchReport, run: &RunArgs) -> Result<()> {
    writeln!(out, "path: {} ({})", r.choice.path, r.choice.reason)?;
    writeln!(out, "rows: {}", r.output_rows)?;
    writeln!(
        out,
        "latency_s: p50={:.6} p95={:.6} p99={:.6} max={:.6}",
        r.latency.p50, r.latency.p95, r.latency.p99, r.latency.max
    )?;
    writeln!(out, "temp: {} blocks, {:.3} MB", r.spill.temp_blocks_written, r.temp_mb())?;
    writeln!(out, "peak_mem_bytes: {}", r.peak_mem_bytes)?;
    writeln!(out, "digest: {}", r.digest)?;
    if let Some(p) = &run.csv {
        write_sweep_csv(BufWriter::new(File::create(p)?), &[SweepRow::from_report(r)])?;
    }
    Ok(())
}
