//! Error types, relations, both execution paths, the path selector and the
//! regime-shift cost model.

pub mod bench;
pub mod cli;
pub mod digest;
pub mod error;
pub mod exec;
pub mod generate;
pub mod oracle;
pub mod order;
mod prefetch;
pub mod regime;
pub mod relation;
pub mod row;
pub mod selector;
pub mod spill;
pub mod stats;
pub mod tensor;

pub use digest::{multiset_digest, sequence_digest, ResultDigest};
pub use error::{Error, Result};
pub use generate::{generate_relation, GenSpec, KeyDistribution};
pub use oracle::{comparison_sort_oracle, nested_loop_join_oracle};
pub use order::{Direction, SortKey, SortSpec};
pub use relation::{AttrType, Attribute, Column, Relation, RelationBuilder, Schema};
pub use spill::{SpillStats, StreamId, TempArena};
pub use exec::ExecOutcome;
pub use row::{external_sort_row, hash_join_row, BuildSide, JoinSpec, MemoryBudget};
pub use tensor::{key_axis_align, tensor_join, tensor_sort, to_tensor, AxisAlignment, TensorRelation};
pub use regime::{dispersion, fit_regime, predict, Measurement, RegimeFit};
pub use selector::{select_path, select_path_with, Operation, Path, PathChoice, Policy, Reason, RuntimeSignals, SelectorConfig};
pub use stats::{percentile, LatencyDistribution};
pub use bench::{run_experiment, sweep, BenchReport, ExperimentConfig, SweepRow};
