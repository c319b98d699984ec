//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! [defaults]
//! repetitions = 30
//!
//! [auto_vs_forced]
//! operation = join
//! n = 10000, 100000, 300000, 1000000
//! budget = 1MB, 64MB
//! policy = force_row, force_tensor, auto
//! ```
//!
//! Keys outside any section, or in `[defaults]`, apply to every section
//! that does not set them. `n`, `budget` and `policy` take comma-separated
//! lists; a section expands to their cartesian product, `n` outermost.

use std::path::PathBuf;

use crate::bench::ExperimentConfig;
use crate::error::{Error, Result};
use crate::generate::{GenSpec, KeyDistribution, CALIBRATION_PAYLOAD_WIDTH};
use crate::order::SortSpec;
use crate::row::MemoryBudget;
use crate::selector::{Operation, Policy};

const KEYS: [&str; 15] = [
    "operation",
    "n",
    "n_right",
    "key_domain",
    "payload_width",
    "distribution",
    "seed",
    "sort_keys",
    "budget",
    "policy",
    "repetitions",
    "warmup",
    "temp_dir",
    "theta_fit",
    "theta_small",
];

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
}

#[derive(Debug, Default)]
struct Section {
    line: usize,
    entries: Vec<(String, Entry)>,
}

impl Section {
    fn get<'a>(&'a self, defaults: &'a Section, key: &str) -> Option<&'a Entry> {
        let find = |s: &'a Section| s.entries.iter().rev().find(|(k, _)| k == key).map(|(_, e)| e);
        find(self).or_else(|| find(defaults))
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

/// Parses a config file into the expanded experiment grid, in file order.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>> {
    let mut defaults = Section::default();
    let mut sections: Vec<Section> = Vec::new();
    let mut in_defaults = true;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
            continue;
        }
        if let Some(rest) = t.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?
                .trim();
            if name.is_empty() {
                return Err(err(line, "empty section name"));
            }
            in_defaults = name == "defaults";
            if !in_defaults {
                sections.push(Section { line, entries: Vec::new() });
            }
            continue;
        }
        let (key, value) = t
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{t}`")))?;
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(err(line, format!("unknown key `{key}`")));
        }
        let entry = Entry {
            line,
            value: value.trim().to_string(),
        };
        let target = if in_defaults { &mut defaults } else { sections.last_mut().expect("section") };
        target.entries.push((key, entry));
    }
    if sections.is_empty() {
        return Err(err(0, "no experiment sections"));
    }
    let mut grid = Vec::new();
    for s in &sections {
        expand(s, &defaults, &mut grid)?;
    }
    Ok(grid)
}

fn list<T>(e: &Entry, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items: Vec<T> = e
        .value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse(v).map_err(|x| err(e.line, x.to_string())))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(err(e.line, "empty list"));
    }
    Ok(items)
}

fn scalar<T: std::str::FromStr>(e: &Entry) -> Result<T> {
    e.value
        .parse()
        .map_err(|_| err(e.line, format!("bad value `{}`", e.value)))
}

fn expand(s: &Section, d: &Section, grid: &mut Vec<ExperimentConfig>) -> Result<()> {
    let get = |k: &str| s.get(d, k);
    let operation = match get("operation").map(|e| (e, e.value.to_ascii_lowercase())) {
        None => Operation::Join,
        Some((_, v)) if v == "join" => Operation::Join,
        Some((_, v)) if v == "sort" => Operation::Sort,
        Some((e, v)) => return Err(err(e.line, format!("unknown operation `{v}`"))),
    };
    let ns = list(
        get("n").ok_or_else(|| err(s.line, "missing `n`"))?,
        |v| v.parse::<usize>().map_err(|_| Error::Format(format!("bad row count `{v}`"))),
    )?;
    let budgets = match get("budget") {
        Some(e) => list(e, str::parse::<MemoryBudget>)?,
        None => vec![MemoryBudget::mib(64)?],
    };
    let policies = match get("policy") {
        Some(e) => list(e, str::parse::<Policy>)?,
        None => vec![Policy::Auto],
    };
    let n_right: Option<usize> = get("n_right").map(scalar).transpose()?;
    let key_domain: Option<u64> = match get("key_domain") {
        Some(e) if e.value.eq_ignore_ascii_case("n") => None,
        Some(e) => Some(scalar(e)?),
        None => None,
    };
    let payload_width = get("payload_width").map(scalar).transpose()?.unwrap_or(CALIBRATION_PAYLOAD_WIDTH);
    let distribution = match get("distribution") {
        None => KeyDistribution::Uniform,
        Some(e) => parse_distribution(&e.value).map_err(|m| err(e.line, m))?,
    };
    let seed: u64 = get("seed").map(scalar).transpose()?.unwrap_or(1);
    let sort_spec: Option<SortSpec> = match get("sort_keys") {
        Some(e) => Some(e.value.parse().map_err(|x: Error| err(e.line, x.to_string()))?),
        None if operation == Operation::Sort => return Err(err(s.line, "sort section without `sort_keys`")),
        None => None,
    };
    let repetitions: usize = get("repetitions").map(scalar).transpose()?.unwrap_or(super::DEFAULT_REPETITIONS);
    if repetitions == 0 {
        return Err(err(get("repetitions").map_or(s.line, |e| e.line), "repetitions must be >= 1"));
    }
    let warmup: usize = get("warmup").map(scalar).transpose()?.unwrap_or(super::DEFAULT_WARMUP);
    let temp_dir = get("temp_dir").map(|e| PathBuf::from(&e.value));
    let mut selector = crate::selector::SelectorConfig::default();
    if let Some(e) = get("theta_fit") {
        selector.theta_fit = scalar(e)?;
    }
    if let Some(e) = get("theta_small") {
        selector.theta_small = scalar(e)?;
    }

    for &n in &ns {
        let gen = |rows: usize, seed: u64| GenSpec {
            n: rows,
            key_domain: key_domain.unwrap_or(n.max(1) as u64),
            distribution,
            payload_width,
            seed,
        };
        for &budget in &budgets {
            for &policy in &policies {
                grid.push(ExperimentConfig {
                    operation,
                    gen_left: gen(n, seed),
                    gen_right: gen(n_right.unwrap_or(n), seed + 1),
                    sort_spec: sort_spec.clone(),
                    budget,
                    policy,
                    repetitions,
                    warmup,
                    temp_dir: temp_dir.clone(),
                    selector,
                });
            }
        }
    }
    Ok(())
}

/// `uniform` or `zipf:<exponent>`.
pub fn parse_distribution(v: &str) -> std::result::Result<KeyDistribution, String> {
    let v = v.trim().to_ascii_lowercase();
    if v == "uniform" {
        return Ok(KeyDistribution::Uniform);
    }
    match v.strip_prefix("zipf:").map(|s| s.trim().parse::<f64>()) {
        Some(Ok(s)) if s > 0.0 && s.is_finite() => Ok(KeyDistribution::Zipf(s)),
        _ => Err(format!("unknown distribution `{v}`")),
    }
}
