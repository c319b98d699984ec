//! Result type shared by both execution paths.

use crate::relation::Relation;
use crate::spill::SpillStats;

/// Output of one physical operator run.
#[derive(Debug, Clone)]
pub struct ExecOutcome {
    pub relation: Relation,
    pub spill: SpillStats,
    /// Peak bytes held by the operator's instrumented structures: the build
    /// table or sort buffer, block buffers, and, on the tensor path, key
    /// indexes, alignment and output.
    pub peak_mem_bytes: u64,
    /// Peak size of the in-memory build structure alone (hash table or sort
    /// run buffer). Zero on the tensor path.
    pub peak_build_bytes: u64,
    /// Largest partitioning fanout used; zero when nothing was partitioned.
    pub max_fanout: u32,
}
