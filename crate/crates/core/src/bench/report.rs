//! Per-figure series and regime fits derived from sweep rows.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::bench::SweepRow;
use crate::error::Result;
use crate::regime::{fit_regime, Measurement, RegimeFit};
use crate::selector::Path as ExecPath;

fn forced(r: &SweepRow) -> bool {
    !r.is_error() && (r.policy == "force_row" || r.policy == "force_tensor")
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

/// One figure: file stem, header, and rows.
pub struct Series {
    pub name: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

fn e(x: f64) -> String {
    format!("{x:.5e}")
}

/// Builds the figure series from sweep rows, skipping error rows.
pub fn figure_series(rows: &[SweepRow]) -> Vec<Series> {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| !r.is_error()).collect();
    let joins = |r: &&&SweepRow| r.operation == "join";
    vec![
        Series {
            name: "regime_shift",
            header: &["operation", "budget_bytes", "path", "n", "p50_s", "per_row_ns"],
            rows: ok
                .iter()
                .filter(|r| forced(r))
                .map(|r| {
                    vec![
                        r.operation.clone(),
                        r.budget_bytes.to_string(),
                        r.path_taken.clone(),
                        r.n_left.to_string(),
                        e(r.p50_s),
                        e(ratio(r.p50_s * 1e9, r.n_left as f64)),
                    ]
                })
                .collect(),
        },
        Series {
            name: "hash_table_growth",
            header: &["n", "budget_bytes", "peak_mem_bytes", "temp_mb"],
            rows: ok
                .iter()
                .filter(joins)
                .filter(|r| r.policy == "force_row")
                .map(|r| vec![r.n_left.to_string(), r.budget_bytes.to_string(), r.peak_mem_bytes.to_string(), e(r.temp_mb)])
                .collect(),
        },
        Series {
            name: "tail_latency",
            header: &["operation", "n", "budget_bytes", "policy", "path", "p50_s", "p95_s", "p99_s", "max_s", "p99_over_p50"],
            rows: ok
                .iter()
                .map(|r| {
                    vec![
                        r.operation.clone(),
                        r.n_left.to_string(),
                        r.budget_bytes.to_string(),
                        r.policy.clone(),
                        r.path_taken.clone(),
                        e(r.p50_s),
                        e(r.p95_s),
                        e(r.p99_s),
                        e(r.max_s),
                        e(ratio(r.p99_s, r.p50_s)),
                    ]
                })
                .collect(),
        },
        Series {
            name: "multikey_sort",
            header: &["operation", "n", "budget_bytes", "policy", "path", "p50_s", "p99_s", "temp_mb"],
            rows: ok
                .iter()
                .filter(|r| r.operation.starts_with("sort"))
                .map(|r| {
                    vec![
                        r.operation.clone(),
                        r.n_left.to_string(),
                        r.budget_bytes.to_string(),
                        r.policy.clone(),
                        r.path_taken.clone(),
                        e(r.p50_s),
                        e(r.p99_s),
                        e(r.temp_mb),
                    ]
                })
                .collect(),
        },
        Series {
            name: "p99_vs_n",
            header: &["operation", "n", "budget_bytes", "policy", "path", "p99_s"],
            rows: ok
                .iter()
                .map(|r| {
                    vec![
                        r.operation.clone(),
                        r.n_left.to_string(),
                        r.budget_bytes.to_string(),
                        r.policy.clone(),
                        r.path_taken.clone(),
                        e(r.p99_s),
                    ]
                })
                .collect(),
        },
        Series {
            name: "temp_io",
            header: &["operation", "n", "budget_bytes", "policy", "path", "temp_blocks", "temp_mb"],
            rows: ok
                .iter()
                .map(|r| {
                    vec![
                        r.operation.clone(),
                        r.n_left.to_string(),
                        r.budget_bytes.to_string(),
                        r.policy.clone(),
                        r.path_taken.clone(),
                        r.temp_blocks.to_string(),
                        e(r.temp_mb),
                    ]
                })
                .collect(),
        },
    ]
}

/// Writes one `<name>.csv` per figure into `dir`.
pub fn write_figures(rows: &[SweepRow], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for s in figure_series(rows) {
        let path = dir.join(format!("{}.csv", s.name));
        let mut w = ::csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
        w.write_record(s.header)?;
        for r in &s.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// Identifies one fitted series.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FitKey {
    pub operation: String,
    pub budget_bytes: u64,
    pub path: String,
}

/// Groups forced-policy rows by `(operation, budget, path)` and fits each
/// group on its P50 times.
pub fn fit_sweep(rows: &[SweepRow]) -> Vec<(FitKey, Result<RegimeFit>)> {
    let mut groups: BTreeMap<FitKey, Vec<Measurement>> = BTreeMap::new();
    for r in rows.iter().filter(|r| forced(r)) {
        let Ok(path) = r.path_taken.parse::<ExecPath>() else { continue };
        let Ok(m) = Measurement::new(r.n_left, r.budget_bytes, path, vec![r.p50_s], r.temp_blocks) else {
            continue;
        };
        groups
            .entry(FitKey {
                operation: r.operation.clone(),
                budget_bytes: r.budget_bytes,
                path: r.path_taken.clone(),
            })
            .or_default()
            .push(m);
    }
    groups.into_iter().map(|(k, ms)| (k, fit_regime(&ms))).collect()
}

pub const FIT_COLUMNS: [&str; 9] = [
    "operation",
    "budget_bytes",
    "path",
    "linear_coeff",
    "intercept",
    "spill_threshold_rows",
    "residual_std",
    "alpha_n",
    "alpha_s",
];

/// One row per alpha point; a purely linear fit gets one row with empty
/// alpha fields. Failed fits are skipped.
pub fn write_fit_csv<W: Write>(out: W, fits: &[(FitKey, Result<RegimeFit>)]) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(out);
    w.write_record(FIT_COLUMNS)?;
    for (k, fit) in fits {
        let Ok(f) = fit else { continue };
        let head = [
            k.operation.clone(),
            k.budget_bytes.to_string(),
            k.path.clone(),
            e(f.linear_coeff),
            e(f.intercept),
            f.spill_threshold_rows.map(|n| n.to_string()).unwrap_or_default(),
            e(f.residual_std),
        ];
        if f.alpha_curve.is_empty() {
            w.write_record(head.iter().cloned().chain([String::new(), String::new()]))?;
        }
        for &(n, a) in &f.alpha_curve {
            w.write_record(head.iter().cloned().chain([n.to_string(), e(a)]))?;
        }
    }
    w.flush()?;
    Ok(())
}
