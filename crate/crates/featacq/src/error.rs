//! Error types, one enum per domain, plus a top-level error that maps to
//! process exit codes at the CLI boundary.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("feature {0} is already observed")]
    AlreadyObserved(usize),
    #[error("feature index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("need at least {min} rows, got {got}")]
    TooFewRows { got: usize, min: usize },
    #[error("split ratios must sum to 1, got {0}")]
    BadRatios(f64),
    #[error("row {row}, column {col}: cannot parse {text:?} as a number")]
    ParseError { row: usize, col: usize, text: String },
    #[error("row {row} has {got} cells, expected {expected}")]
    RaggedRows { row: usize, got: usize, expected: usize },
    #[error("label column {col} out of range for {width} columns")]
    BadLabelColumn { col: usize, width: usize },
    #[error("label {0:?} is not a non-negative integer")]
    BadLabel(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{path}:{line}: {msg}")]
    Malformed { path: String, line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("covariance is singular even after regularization")]
    SingularCovariance,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("need more samples than dimensions to fit (n={n}, d={d})")]
    TooFewSamples { n: usize, d: usize },
    #[error("observed and target index sets overlap")]
    OverlappingSets,
    #[error("target index set is empty")]
    EmptyTarget,
    #[error("dimension mismatch: got {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("feature {0} is already observed")]
    AlreadyObserved(usize),
    #[error("target variable is already observed")]
    TargetObserved,
    #[error("distributions have mismatched support")]
    SupportMismatch,
    #[error("probability table sums to {0}, expected 1")]
    NotNormalized(f64),
    #[error("model file: {0}")]
    Persistence(String),
    #[error("engine does not support this task")]
    WrongEngine,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph has a directed cycle")]
    CyclicGraph,
    #[error("node {0} out of range")]
    InvalidNode(usize),
    #[error("self loop on node {0}")]
    SelfLoop(usize),
    #[error("at most 64 nodes supported, got {0}")]
    TooManyNodes(usize),
    #[error("no acyclic orientation without new v-structures exists")]
    NoValidExtension,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AcquireError {
    #[error("no candidate features to score")]
    NoCandidates,
    #[error("confidence stopping requires a classification model")]
    ConfidenceNeedsClassifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChronoError {
    #[error("no remaining time steps")]
    NoRemainingSteps,
    #[error("step {step} violates chronological order (last acquired {last})")]
    NotChronological { step: usize, last: i64 },
    #[error("counts are misaligned with the support")]
    Misaligned,
    #[error("calibration requires at least one validation pair per time step")]
    EmptyValidation,
}

/// Top-level error for pipeline and CLI code.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Acquire(#[from] AcquireError),
    #[error(transparent)]
    Chrono(#[from] ChronoError),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code contract: 0 success, 2 config, 3 data, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io(_) => 3,
            _ => 4,
        }
    }
}
