//! Batch-dynamic maximal matching in rank-`r` hypergraphs.
//!
//! [`DynamicMatching`] applies batches of hyperedge insertions and deletions
//! and keeps the matching maximal after each one. Every batch is charged to
//! a logical work/depth meter, and matched-edge lifetimes are recorded as
//! epochs. The [`oracle`] module recomputes everything from scratch for
//! verification.

pub mod batch_set;
pub mod config;
pub mod cost;
pub mod edge;
pub mod engine;
pub mod error;
pub mod instrument;
pub mod leveling;
pub mod luby;
pub mod oracle;
pub mod stream;
pub mod workload;

pub use batch_set::BatchSet;
pub use config::{Config, CostConstants};
pub use cost::{BatchCost, CostMeter};
pub use edge::{canonical_edge, EdgeKey, EdgeLocation, Level, VertexId};
pub use engine::{BatchReport, DynamicMatching, MatchedEdge, SettleRecord, UpdateBatch};
pub use error::{Error, Result};
pub use instrument::{EpochRecord, StatsReport, Termination};
pub use oracle::{check_maximality, check_state, exact_maximum_matching, Violation, ViolationKind};
pub use stream::{StreamError, StreamFile};
pub use workload::{generate, Generator, WorkloadError, WorkloadSpec};
