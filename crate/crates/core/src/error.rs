use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("attribute `{name}` has type {found}, expected {expected}")]
    TypeMismatch {
        name: String,
        expected: &'static str,
        found: String,
    },

    #[error("column shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid generation spec: {0}")]
    InvalidGenSpec(String),

    #[error("memory budget of {0} bytes is below the 65536-byte minimum")]
    InvalidBudget(u64),

    #[error("invalid sort spec: {0}")]
    InvalidSortSpec(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("corrupt temp block: used length {used} exceeds capacity {capacity}")]
    CorruptBlock { used: usize, capacity: usize },

    #[error("row of {0} bytes does not fit in one temp block")]
    OversizeRow(usize),

    #[error("zero-width rows cannot be spilled")]
    ZeroWidthRow,

    #[error("key group of {bytes} bytes still exceeds budget of {budget} bytes after {depth} partitioning levels")]
    BudgetTooSmall { bytes: u64, budget: u64, depth: u32 },

    #[error("join would produce {rows} rows, above the cap of {cap}")]
    OutputTooLarge { rows: u64, cap: u64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("percentile requested over an empty sample set")]
    EmptySamples,

    #[error("percentile {0} outside (0, 100]")]
    InvalidPercentile(f64),

    #[error("result digest changed between repetitions: {first} vs {other}")]
    DigestMismatch { first: String, other: String },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
