//! Sweep CSV: one row per experiment, fixed column order.

use std::io::{Read, Write};

use crate::bench::{BenchReport, ExperimentConfig};
use crate::error::{Error, Result};

pub const SWEEP_COLUMNS: [&str; 15] = [
    "operation",
    "n_left",
    "n_right",
    "key_domain",
    "budget_bytes",
    "policy",
    "path_taken",
    "p50_s",
    "p95_s",
    "p99_s",
    "max_s",
    "temp_blocks",
    "temp_mb",
    "peak_mem_bytes",
    "digest_hex",
];

/// `path_taken` of a cell that failed; its `digest_hex` holds the message.
pub const ERROR_PATH: &str = "error";

/// One sweep CSV row. Float fields hold values already rounded to the six
/// significant digits they are written with.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub operation: String,
    pub n_left: u64,
    pub n_right: u64,
    pub key_domain: u64,
    pub budget_bytes: u64,
    pub policy: String,
    pub path_taken: String,
    pub p50_s: f64,
    pub p95_s: f64,
    pub p99_s: f64,
    pub max_s: f64,
    pub temp_blocks: u64,
    pub temp_mb: f64,
    pub peak_mem_bytes: u64,
    pub digest_hex: String,
}

fn fmt_float(x: f64) -> String {
    format!("{x:.5e}")
}

fn round6(x: f64) -> f64 {
    fmt_float(x).parse().expect("formatted float parses")
}

impl SweepRow {
    fn skeleton(config: &ExperimentConfig) -> Self {
        let sort = config.operation == crate::selector::Operation::Sort;
        Self {
            operation: config.operation_label(),
            n_left: config.gen_left.n as u64,
            n_right: if sort { 0 } else { config.gen_right.n as u64 },
            key_domain: config.gen_left.key_domain,
            budget_bytes: config.budget.bytes(),
            policy: config.policy.to_string(),
            path_taken: String::new(),
            p50_s: 0.0,
            p95_s: 0.0,
            p99_s: 0.0,
            max_s: 0.0,
            temp_blocks: 0,
            temp_mb: 0.0,
            peak_mem_bytes: 0,
            digest_hex: String::new(),
        }
    }

    pub fn from_report(r: &BenchReport) -> Self {
        Self {
            path_taken: r.choice.path.to_string(),
            p50_s: round6(r.latency.p50),
            p95_s: round6(r.latency.p95),
            p99_s: round6(r.latency.p99),
            max_s: round6(r.latency.max),
            temp_blocks: r.spill.temp_blocks_written,
            temp_mb: round6(r.temp_mb()),
            peak_mem_bytes: r.peak_mem_bytes,
            digest_hex: r.digest.to_hex(),
            ..Self::skeleton(&r.config)
        }
    }

    pub fn from_error(config: &ExperimentConfig, e: &Error) -> Self {
        Self {
            path_taken: ERROR_PATH.into(),
            digest_hex: e.to_string(),
            ..Self::skeleton(config)
        }
    }

    pub fn is_error(&self) -> bool {
        self.path_taken == ERROR_PATH
    }

    fn record(&self) -> [String; 15] {
        [
            self.operation.clone(),
            self.n_left.to_string(),
            self.n_right.to_string(),
            self.key_domain.to_string(),
            self.budget_bytes.to_string(),
            self.policy.clone(),
            self.path_taken.clone(),
            fmt_float(self.p50_s),
            fmt_float(self.p95_s),
            fmt_float(self.p99_s),
            fmt_float(self.max_s),
            self.temp_blocks.to_string(),
            fmt_float(self.temp_mb),
            self.peak_mem_bytes.to_string(),
            self.digest_hex.clone(),
        ]
    }

    fn parse(rec: &::csv::StringRecord, line: u64) -> Result<Self> {
        if rec.len() != SWEEP_COLUMNS.len() {
            return Err(Error::Format(format!(
                "line {line}: {} fields, expected {}",
                rec.len(),
                SWEEP_COLUMNS.len()
            )));
        }
        let int = |i: usize| -> Result<u64> {
            rec[i].trim().parse().map_err(|_| {
                Error::Format(format!("line {line}: bad {} `{}`", SWEEP_COLUMNS[i], &rec[i]))
            })
        };
        let float = |i: usize| -> Result<f64> {
            rec[i].trim().parse().map_err(|_| {
                Error::Format(format!("line {line}: bad {} `{}`", SWEEP_COLUMNS[i], &rec[i]))
            })
        };
        Ok(Self {
            operation: rec[0].to_string(),
            n_left: int(1)?,
            n_right: int(2)?,
            key_domain: int(3)?,
            budget_bytes: int(4)?,
            policy: rec[5].to_string(),
            path_taken: rec[6].to_string(),
            p50_s: float(7)?,
            p95_s: float(8)?,
            p99_s: float(9)?,
            max_s: float(10)?,
            temp_blocks: int(11)?,
            temp_mb: float(12)?,
            peak_mem_bytes: int(13)?,
            digest_hex: rec[14].to_string(),
        })
    }
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a sweep CSV; the header must name the columns in order.
pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = ::csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().map(str::trim).ne(SWEEP_COLUMNS.iter().copied()) {
        return Err(Error::Format(format!(
            "unexpected sweep header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| SweepRow::parse(&rec?, i as u64 + 2))
        .collect()
}
