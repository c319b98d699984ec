//! The row-oriented execution path.
//!
//! Inputs are flattened into canonical rows up front. Joins build a
//! bucketized hash table under a byte budget and fall back to Grace-style
//! recursive partitioning through [`TempArena`](crate::spill::TempArena)
//! streams; sorts generate budget-sized runs and merge them with fan-in 64.

mod hash;
mod join;
mod sort;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use hash::{mix64, next_seed, partition_of, INITIAL_SEED};
pub use join::{hash_join_row, table_charge, MAX_FANOUT, MAX_RECURSION};
pub use sort::{external_sort_row, sort_charge, MERGE_FAN_IN};

pub const MIN_BUDGET: u64 = 65536;

/// Per-operator memory budget in bytes, the `work_mem` analogue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MemoryBudget(u64);

impl MemoryBudget {
    pub fn new(bytes: u64) -> Result<Self> {
        if bytes < MIN_BUDGET {
            return Err(Error::InvalidBudget(bytes));
        }
        Ok(Self(bytes))
    }

    pub fn bytes(self) -> u64 {
        self.0
    }

    pub fn kib(k: u64) -> Result<Self> {
        Self::new(k << 10)
    }

    pub fn mib(m: u64) -> Result<Self> {
        Self::new(m << 20)
    }
}

/// `64KB`, `1MB`, `2GB` (binary multiples) or a plain byte count.
impl FromStr for MemoryBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let upper = t.to_ascii_uppercase();
        let (digits, shift) = [("KIB", 10), ("MIB", 20), ("GIB", 30), ("KB", 10), ("MB", 20), ("GB", 30), ("K", 10), ("M", 20), ("G", 30), ("B", 0)]
            .iter()
            .find_map(|(suffix, shift)| upper.strip_suffix(suffix).map(|d| (d.trim().to_string(), *shift)))
            .unwrap_or((upper.clone(), 0));
        let n: u64 = digits
            .parse()
            .map_err(|_| Error::Format(format!("bad memory size `{s}`")))?;
        let bytes = n
            .checked_mul(1u64 << shift)
            .ok_or_else(|| Error::Format(format!("memory size `{s}` overflows")))?;
        MemoryBudget::new(bytes)
    }
}

impl fmt::Display for MemoryBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        if b % (1 << 30) == 0 {
            write!(f, "{}GB", b >> 30)
        } else if b % (1 << 20) == 0 {
            write!(f, "{}MB", b >> 20)
        } else if b % (1 << 10) == 0 {
            write!(f, "{}KB", b >> 10)
        } else {
            write!(f, "{b}B")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuildSide {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinSpec {
    pub key: String,
    /// `None` builds on the smaller input (the right one on ties).
    pub build_side: Option<BuildSide>,
}

impl JoinSpec {
    pub fn on(key: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            build_side: None,
        }
    }

    pub fn with_build_side(mut self, side: BuildSide) -> Self {
        self.build_side = Some(side);
        self
    }
}
