//! Runtime choice between the row and tensor execution paths.
//!
//! The decision only looks at cheap observable signals: input scale, key
//! cardinality and the expected intermediate size. It never changes the
//! result, only which engine computes it.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::relation::{join_output_schema, Relation};
use crate::row::MemoryBudget;

/// Rows drawn for the distinct-count estimate when the key cardinality is
/// not known from the generator.
pub const CARDINALITY_SAMPLE_ROWS: usize = 4096;
const SAMPLE_SEED: u64 = 0x5EED_CA4D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operation {
    Join,
    Sort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Path {
    Row,
    Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Auto,
    ForceRow,
    ForceTensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    FitsInMemory,
    SpillRiskHigh,
    SmallInput,
    Forced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeSignals {
    pub operation: Operation,
    pub n_left: u64,
    /// Zero for sorts.
    pub n_right: u64,
    pub serialized_bytes_build: u64,
    pub key_cardinality_estimate: u64,
    /// Canonical width of one output row.
    pub output_row_width: u64,
    pub expected_intermediate_bytes: u64,
    pub budget: MemoryBudget,
}

impl RuntimeSignals {
    /// Signals for joining `left` and `right` on `key`. The build side is the
    /// smaller input, as in the row engine. `key_cardinality` overrides the
    /// sampled distinct-count estimate.
    pub fn for_join(
        left: &Relation,
        right: &Relation,
        key: &str,
        budget: MemoryBudget,
        key_cardinality: Option<u64>,
    ) -> Result<Self> {
        let out = join_output_schema(left.schema(), right.schema(), key)?;
        let build = if right.row_count() <= left.row_count() { right } else { left };
        let cardinality = match key_cardinality {
            Some(d) => d,
            None => {
                let l = estimate_distinct(left.column_by_name(key)?.as_int().expect("int key"));
                let r = estimate_distinct(right.column_by_name(key)?.as_int().expect("int key"));
                l.max(r)
            }
        };
        let mut s = Self {
            operation: Operation::Join,
            n_left: left.row_count() as u64,
            n_right: right.row_count() as u64,
            serialized_bytes_build: build.serialized_bytes(),
            key_cardinality_estimate: cardinality,
            output_row_width: out.row_width() as u64,
            expected_intermediate_bytes: 0,
            budget,
        };
        s.expected_intermediate_bytes = estimate_intermediate(&s);
        Ok(s)
    }

    /// Signals for sorting `rel`; the whole input is the buffered state.
    pub fn for_sort(rel: &Relation, budget: MemoryBudget) -> Self {
        let mut s = Self {
            operation: Operation::Sort,
            n_left: rel.row_count() as u64,
            n_right: 0,
            serialized_bytes_build: rel.serialized_bytes(),
            key_cardinality_estimate: 0,
            output_row_width: rel.schema().row_width() as u64,
            expected_intermediate_bytes: 0,
            budget,
        };
        s.expected_intermediate_bytes = estimate_intermediate(&s);
        s
    }
}

/// Expected output bytes: `n_left * n_right / max(1, cardinality)` rows for
/// joins, the input itself for sorts.
pub fn estimate_intermediate(s: &RuntimeSignals) -> u64 {
    match s.operation {
        Operation::Join => {
            let rows = s.n_left as u128 * s.n_right as u128 / s.key_cardinality_estimate.max(1) as u128;
            (rows * s.output_row_width as u128).min(u64::MAX as u128) as u64
        }
        Operation::Sort => s.n_left * s.output_row_width,
    }
}

/// Guaranteed-error estimator over a fixed-seed sample of at most
/// [`CARDINALITY_SAMPLE_ROWS`] values: `sqrt(n/r) * f1 + sum_{j>=2} f_j`,
/// where `f_j` counts sampled values seen exactly `j` times.
pub fn estimate_distinct(values: &[i64]) -> u64 {
    let n = values.len();
    if n == 0 {
        return 0;
    }
    let r = n.min(CARDINALITY_SAMPLE_ROWS);
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let mut freq: HashMap<i64, u32> = HashMap::with_capacity(r);
    for i in sample(&mut rng, n, r) {
        *freq.entry(values[i]).or_insert(0) += 1;
    }
    let singletons = freq.values().filter(|&&c| c == 1).count() as f64;
    let repeated = (freq.len() as f64) - singletons;
    let d = (n as f64 / r as f64).sqrt() * singletons + repeated;
    (d.round() as u64).clamp(1, n as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorConfig {
    /// Build bytes up to this fraction of the budget run on the row path.
    pub theta_fit: f64,
    /// Inputs with at most this many rows in total stay on the row path.
    pub theta_small: u64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            theta_fit: 0.75,
            theta_small: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathChoice {
    pub path: Path,
    pub reason: Reason,
    pub signals: RuntimeSignals,
}

/// [`select_path_with`] under the default thresholds.
pub fn select_path(signals: &RuntimeSignals, policy: Policy) -> PathChoice {
    select_path_with(signals, policy, &SelectorConfig::default())
}

pub fn select_path_with(signals: &RuntimeSignals, policy: Policy, config: &SelectorConfig) -> PathChoice {
    let (path, reason) = match policy {
        Policy::ForceRow => (Path::Row, Reason::Forced),
        Policy::ForceTensor => (Path::Tensor, Reason::Forced),
        Policy::Auto => {
            if signals.serialized_bytes_build as f64 <= config.theta_fit * signals.budget.bytes() as f64 {
                (Path::Row, Reason::FitsInMemory)
            } else if signals.n_left + signals.n_right <= config.theta_small {
                (Path::Row, Reason::SmallInput)
            } else {
                (Path::Tensor, Reason::SpillRiskHigh)
            }
        }
    };
    PathChoice {
        path,
        reason,
        signals: signals.clone(),
    }
}

macro_rules! names {
    ($ty:ty { $($variant:ident => $name:literal),* $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$variant => $name),* }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.pad(self.as_str())
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                let t = s.trim();
                $(if t.eq_ignore_ascii_case($name) { return Ok(Self::$variant); })*
                Err(Error::Format(format!(concat!("unknown ", stringify!($ty), " `{}`"), t)))
            }
        }
    };
}

names!(Path { Row => "row", Tensor => "tensor" });
names!(Policy { Auto => "auto", ForceRow => "force_row", ForceTensor => "force_tensor" });
names!(Reason { FitsInMemory => "FitsInMemory", SpillRiskHigh => "SpillRiskHigh", SmallInput => "SmallInput", Forced => "Forced" });
