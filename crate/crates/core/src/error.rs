use thiserror::Error;

use crate::edge::{EdgeKey, Level, VertexId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("hyperedge has no endpoints")]
    EmptyEdge,
    #[error("hyperedge has {got} distinct endpoints, rank bound is {max}")]
    RankExceeded { got: usize, max: usize },
    #[error("hyperedge {0} is already present")]
    DuplicateEdge(EdgeKey),
    #[error("hyperedge {0} is not present")]
    UnknownEdge(EdgeKey),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("erase of an item that is not in the set")]
    EraseMissing,
    #[error("level {level} is out of range for vertex {vertex} at level {current}")]
    LevelOutOfRange { vertex: VertexId, level: Level, current: Level },
    #[error("vertex {vertex} is not a maximum-level endpoint of {edge}")]
    NotMaxLevel { edge: EdgeKey, vertex: VertexId },
    #[error("vertex {vertex} is not an endpoint of {edge}")]
    NotEndpoint { edge: EdgeKey, vertex: VertexId },
    #[error("hyperedge {0} is not active")]
    NotActive(EdgeKey),

    #[error("static matcher exceeded its round cap of {cap}")]
    RoundCapExceeded { cap: usize },
    #[error("settle at level {level} did not converge within {cap} repetitions")]
    SettleDivergence { level: Level, cap: usize },
    #[error("settle at level {level} matched {matched} edges for {initial} rising nodes, need at least {required}")]
    ProgressViolation { level: Level, initial: usize, matched: usize, required: usize },
    #[error("matched hyperedge {0} routed to unmatched deletion")]
    MatchedEdgePassed(EdgeKey),
    #[error("hyperedge {0} is not matched")]
    NotMatched(EdgeKey),

    #[error("cost charged outside of an open batch")]
    NoOpenBatch,
    #[error("epoch for {0} is already open")]
    DoubleOpen(EdgeKey),
    #[error("no open epoch for {0}")]
    CloseUnopened(EdgeKey),

    #[error("{got} edges exceed the exhaustive search budget of {max}")]
    TooLarge { got: usize, max: usize },
}

impl Error {
    /// True for errors caused by a malformed update stream rather than an
    /// internal defect.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyEdge
                | Error::RankExceeded { .. }
                | Error::DuplicateEdge(_)
                | Error::UnknownEdge(_)
                | Error::InvalidConfig(_)
        )
    }
}
