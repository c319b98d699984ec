//! Experiment runner: repeated, timed executions of one configuration and
//! grid sweeps emitting plot-ready CSV.

pub mod config;
pub mod csv;
pub mod relfile;
pub mod report;

use std::env;
use std::path::PathBuf;
use std::time::Instant;

use crate::digest::{multiset_digest, sequence_digest, ResultDigest};
use crate::error::{Error, Result};
use crate::exec::ExecOutcome;
use crate::generate::{generate_relation, generate_wide_relation, GenSpec, KEY_ATTR, PAYLOAD_ATTR};
use crate::order::SortSpec;
use crate::relation::Relation;
use crate::row::{external_sort_row, hash_join_row, JoinSpec, MemoryBudget};
use crate::selector::{select_path_with, Operation, Path, PathChoice, Policy, RuntimeSignals, SelectorConfig};
use crate::spill::{SpillStats, TempArena};
use crate::stats::LatencyDistribution;
use crate::tensor::{tensor_join, tensor_sort, to_tensor};

pub use self::csv::{read_sweep_csv, write_sweep_csv, SweepRow};

/// Overrides the directory temp arenas are created under.
pub const TMPDIR_ENV: &str = "TENSORLAB_TMPDIR";

pub const DEFAULT_REPETITIONS: usize = 30;
pub const DEFAULT_WARMUP: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub operation: Operation,
    pub gen_left: GenSpec,
    /// Unused for sorts.
    pub gen_right: GenSpec,
    /// Required for sorts. Keys other than `key` and `payload` become extra
    /// generated `Int64` columns.
    pub sort_spec: Option<SortSpec>,
    pub budget: MemoryBudget,
    pub policy: Policy,
    pub repetitions: usize,
    pub warmup: usize,
    pub temp_dir: Option<PathBuf>,
    pub selector: SelectorConfig,
}

impl ExperimentConfig {
    /// Calibration-tuple join with `n` rows per side.
    pub fn join(n: usize, budget: MemoryBudget, policy: Policy) -> Self {
        Self {
            operation: Operation::Join,
            gen_left: GenSpec::calibration(n, 1),
            gen_right: GenSpec::calibration(n, 2),
            sort_spec: None,
            budget,
            policy,
            repetitions: DEFAULT_REPETITIONS,
            warmup: DEFAULT_WARMUP,
            temp_dir: None,
            selector: SelectorConfig::default(),
        }
    }

    /// Calibration-tuple sort of `n` rows.
    pub fn sort(n: usize, spec: SortSpec, budget: MemoryBudget, policy: Policy) -> Self {
        Self {
            operation: Operation::Sort,
            sort_spec: Some(spec),
            ..Self::join(n, budget, policy)
        }
    }

    pub fn with_repetitions(mut self, repetitions: usize, warmup: usize) -> Self {
        self.repetitions = repetitions;
        self.warmup = warmup;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Format("repetitions must be >= 1".into()));
        }
        self.gen_left.validate()?;
        match self.operation {
            Operation::Join => self.gen_right.validate(),
            Operation::Sort if self.sort_spec.is_none() => {
                Err(Error::InvalidSortSpec("sort experiment without sort keys".into()))
            }
            Operation::Sort => Ok(()),
        }
    }

    /// `join`, or `sort:<number of keys>`.
    pub fn operation_label(&self) -> String {
        match (self.operation, &self.sort_spec) {
            (Operation::Sort, Some(spec)) => format!("sort:{}", spec.keys().len()),
            (Operation::Sort, None) => "sort:0".into(),
            (Operation::Join, _) => "join".into(),
        }
    }

    /// Directory arenas go under: the config's, else [`TMPDIR_ENV`], else
    /// the system temp directory.
    pub fn temp_root(&self) -> PathBuf {
        self.temp_dir
            .clone()
            .or_else(|| env::var_os(TMPDIR_ENV).map(PathBuf::from))
            .unwrap_or_else(env::temp_dir)
    }
}

/// Materialized inputs, reused across repetitions.
#[derive(Debug, Clone)]
pub enum Inputs {
    Join { left: Relation, right: Relation },
    Sort { rel: Relation, spec: SortSpec },
}

impl Inputs {
    pub fn generate(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        match config.operation {
            Operation::Join => Ok(Inputs::Join {
                left: generate_relation(&config.gen_left)?,
                right: generate_relation(&config.gen_right)?,
            }),
            Operation::Sort => {
                let spec = config.sort_spec.clone().expect("validated");
                let extra: Vec<&str> = spec
                    .keys()
                    .iter()
                    .map(|k| k.attribute.as_str())
                    .filter(|a| *a != KEY_ATTR && *a != PAYLOAD_ATTR)
                    .collect();
                Ok(Inputs::Sort {
                    rel: generate_wide_relation(&config.gen_left, &extra)?,
                    spec,
                })
            }
        }
    }

    pub fn signals(&self, budget: MemoryBudget, key_cardinality: Option<u64>) -> Result<RuntimeSignals> {
        match self {
            Inputs::Join { left, right } => RuntimeSignals::for_join(left, right, KEY_ATTR, budget, key_cardinality),
            Inputs::Sort { rel, .. } => Ok(RuntimeSignals::for_sort(rel, budget)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub config: ExperimentConfig,
    pub choice: PathChoice,
    pub latency: LatencyDistribution,
    /// From the first measured repetition; spill behaviour is deterministic.
    pub spill: SpillStats,
    pub peak_mem_bytes: u64,
    /// Multiset digest for joins, order-sensitive digest for sorts.
    pub digest: ResultDigest,
    pub output_rows: u64,
}

impl BenchReport {
    /// Written temp volume in MiB.
    pub fn temp_mb(&self) -> f64 {
        self.spill.temp_mb()
    }
}

/// Result of one timed execution.
#[derive(Debug, Clone)]
pub struct Execution {
    pub seconds: f64,
    pub spill: SpillStats,
    pub peak_mem_bytes: u64,
    pub digest: ResultDigest,
    pub output_rows: u64,
}

/// Runs `path` once on `inputs` under `budget`, in a fresh arena below
/// `temp_root`. Only the operator is timed; for the tensor join that
/// includes building both key indexes.
pub fn execute_once(inputs: &Inputs, path: Path, budget: MemoryBudget, temp_root: &std::path::Path) -> Result<Execution> {
    let (seconds, outcome, peak) = match path {
        Path::Row => {
            let mut arena = TempArena::create(temp_root)?;
            let start = Instant::now();
            let outcome = match inputs {
                Inputs::Join { left, right } => hash_join_row(left, right, &JoinSpec::on(KEY_ATTR), budget, &mut arena)?,
                Inputs::Sort { rel, spec } => external_sort_row(rel, spec, budget, &mut arena)?,
            };
            let seconds = start.elapsed().as_secs_f64();
            arena.close()?;
            let peak = outcome.peak_mem_bytes;
            (seconds, outcome, peak)
        }
        Path::Tensor => match inputs {
            Inputs::Join { left, right } => {
                let start = Instant::now();
                let tl = to_tensor(left, KEY_ATTR)?;
                let tr = to_tensor(right, KEY_ATTR)?;
                let outcome = tensor_join(&tl, &tr)?;
                let seconds = start.elapsed().as_secs_f64();
                let peak = outcome
                    .peak_mem_bytes
                    .max(tl.build_peak_bytes())
                    .max(tl.index_bytes() + tr.build_peak_bytes());
                (seconds, outcome, peak)
            }
            Inputs::Sort { rel, spec } => {
                let start = Instant::now();
                let outcome = tensor_sort(rel, spec)?;
                let seconds = start.elapsed().as_secs_f64();
                let peak = outcome.peak_mem_bytes;
                (seconds, outcome, peak)
            }
        },
    };
    Ok(summarize(inputs, seconds, outcome, peak))
}

fn summarize(inputs: &Inputs, seconds: f64, outcome: ExecOutcome, peak_mem_bytes: u64) -> Execution {
    let digest = match inputs {
        Inputs::Join { .. } => multiset_digest(&outcome.relation),
        Inputs::Sort { .. } => sequence_digest(&outcome.relation),
    };
    Execution {
        seconds,
        spill: outcome.spill,
        peak_mem_bytes,
        digest,
        output_rows: outcome.relation.row_count() as u64,
    }
}

/// Generates the inputs once, then runs `config.warmup` unrecorded and
/// `config.repetitions` recorded executions of the selected path.
pub fn run_experiment(config: &ExperimentConfig) -> Result<BenchReport> {
    let inputs = Inputs::generate(config)?;
    let cardinality = match config.operation {
        Operation::Join => Some(config.gen_left.key_domain.max(config.gen_right.key_domain)),
        Operation::Sort => None,
    };
    run_experiment_on(config, &inputs, cardinality)
}

/// [`run_experiment`] over inputs built elsewhere. `key_cardinality` of
/// `None` falls back to the sampled estimate.
pub fn run_experiment_on(config: &ExperimentConfig, inputs: &Inputs, key_cardinality: Option<u64>) -> Result<BenchReport> {
    if config.repetitions == 0 {
        return Err(Error::Format("repetitions must be >= 1".into()));
    }
    let signals = inputs.signals(config.budget, key_cardinality)?;
    let choice = select_path_with(&signals, config.policy, &config.selector);
    let root = config.temp_root();
    for _ in 0..config.warmup {
        execute_once(inputs, choice.path, config.budget, &root)?;
    }
    let mut samples = Vec::with_capacity(config.repetitions);
    let mut first: Option<Execution> = None;
    for _ in 0..config.repetitions {
        let run = execute_once(inputs, choice.path, config.budget, &root)?;
        samples.push(run.seconds);
        match &first {
            None => first = Some(run),
            Some(f) if f.digest != run.digest => {
                return Err(Error::DigestMismatch {
                    first: f.digest.to_hex(),
                    other: run.digest.to_hex(),
                })
            }
            Some(_) => {}
        }
    }
    let first = first.expect("at least one repetition");
    Ok(BenchReport {
        config: config.clone(),
        choice,
        latency: LatencyDistribution::new(samples)?,
        spill: first.spill,
        peak_mem_bytes: first.peak_mem_bytes,
        digest: first.digest,
        output_rows: first.output_rows,
    })
}

/// Runs every config in order; a failing cell becomes an error row and the
/// sweep continues.
pub fn sweep(grid: &[ExperimentConfig]) -> Vec<SweepRow> {
    sweep_with(grid, |_, _| {})
}

/// [`sweep`] with a callback after each cell, for progress output.
pub fn sweep_with(grid: &[ExperimentConfig], mut on_cell: impl FnMut(usize, &SweepRow)) -> Vec<SweepRow> {
    grid.iter()
        .enumerate()
        .map(|(i, config)| {
            let row = match run_experiment(config) {
                Ok(report) => SweepRow::from_report(&report),
                Err(e) => SweepRow::from_error(config, &e),
            };
            on_cell(i, &row);
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::nested_loop_join_oracle;

    fn quick(config: ExperimentConfig) -> ExperimentConfig {
        let dir = std::env::temp_dir();
        ExperimentConfig { temp_dir: Some(dir), ..config.with_repetitions(3, 1) }
    }

    #[test]
    fn in_memory_row_join_matches_oracle() {
        let c = quick(ExperimentConfig::join(1000, MemoryBudget::mib(64).unwrap(), Policy::ForceRow));
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.temp_mb(), 0.0);
        assert_eq!(r.latency.samples().len(), 3);
        let Inputs::Join { left, right } = Inputs::generate(&c).unwrap() else { unreachable!() };
        assert_eq!(r.digest, multiset_digest(&nested_loop_join_oracle(&left, &right, "key").unwrap()));
    }

    #[test]
    fn paths_agree_and_tensor_never_spills() {
        let budget = MemoryBudget::kib(64).unwrap();
        let row = run_experiment(&quick(ExperimentConfig::join(5000, budget, Policy::ForceRow))).unwrap();
        let tensor = run_experiment(&quick(ExperimentConfig::join(5000, budget, Policy::ForceTensor))).unwrap();
        assert!(row.spill.temp_blocks_written > 0);
        assert_eq!(tensor.spill, SpillStats::default());
        assert_eq!(row.digest, tensor.digest);
        assert_eq!(row.temp_mb(), row.spill.temp_blocks_written as f64 * 8192.0 / (1u64 << 20) as f64);

        let spec: SortSpec = "a1,key:desc".parse().unwrap();
        let row = run_experiment(&quick(ExperimentConfig::sort(5000, spec.clone(), budget, Policy::ForceRow))).unwrap();
        let tensor = run_experiment(&quick(ExperimentConfig::sort(5000, spec, budget, Policy::ForceTensor))).unwrap();
        assert!(row.spill.sort_runs > 1);
        assert_eq!(row.digest, tensor.digest);
        assert_eq!(tensor.spill.temp_blocks_written, 0);
    }

    #[test]
    fn auto_follows_selector() {
        let r = run_experiment(&quick(ExperimentConfig::join(1000, MemoryBudget::mib(64).unwrap(), Policy::Auto))).unwrap();
        assert_eq!(r.choice.path, Path::Row);
        assert_eq!(r.choice.reason, crate::selector::Reason::FitsInMemory);
    }

    #[test]
    fn invalid_configs() {
        let c = ExperimentConfig::join(10, MemoryBudget::mib(1).unwrap(), Policy::Auto).with_repetitions(0, 0);
        assert!(run_experiment(&c).is_err());
        let mut c = ExperimentConfig::join(10, MemoryBudget::mib(1).unwrap(), Policy::Auto);
        c.operation = Operation::Sort;
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn failed_cell_becomes_error_row() {
        let mut bad = quick(ExperimentConfig::join(10, MemoryBudget::mib(1).unwrap(), Policy::ForceRow));
        bad.gen_left.key_domain = 0;
        let good = quick(ExperimentConfig::join(10, MemoryBudget::mib(1).unwrap(), Policy::ForceRow));
        let rows = sweep(&[bad, good]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].path_taken, "error");
        assert!(rows[0].digest_hex.contains("key_domain"));
        assert_eq!(rows[1].path_taken, "row");
    }
}
