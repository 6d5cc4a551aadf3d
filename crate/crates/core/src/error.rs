use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("adding {tail}->{head} would close a directed cycle")]
    Cycle { tail: usize, head: usize },
    #[error("nodes {0} and {1} are already adjacent")]
    Adjacent(usize, usize),
    #[error("arc {tail}->{head} is not in the graph")]
    MissingArc { tail: usize, head: usize },
    #[error("arc {tail}->{head} is not covered")]
    NotCovered { tail: usize, head: usize },
    #[error("invalid arc {tail}->{head} for a graph with {n} nodes")]
    InvalidArc { tail: usize, head: usize, n: usize },
    #[error("node sets must be pairwise disjoint")]
    Overlap,
    #[error("node sets must be non-empty")]
    EmptySet,
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("index {index} out of range (limit {limit})")]
    Index { index: usize, limit: usize },
    #[error("no legal arc addition or removal exists")]
    NoMove,
    #[error("{0} is outside its allowed domain")]
    Domain(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("dataset has no rows")]
    EmptyData,
    #[error("variable {0} has a single state; at least two are required")]
    SingleState(String),
    #[error("family has too many parent configurations to tally")]
    TooManyConfigurations,
    #[error("iterative proportional fitting did not converge after {iterations} sweeps (deviation {deviation:e})")]
    Convergence { iterations: usize, deviation: f64 },
    #[error("exhaustive enumeration supports at most {limit} nodes, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("model class is not part of the atlas")]
    UnknownClass,
}

pub type Result<T> = core::result::Result<T, Error>;
