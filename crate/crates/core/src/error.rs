use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid word: letter {letter} at position {position} outside 1..={dim}")]
    InvalidWord {
        letter: usize,
        position: usize,
        dim: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("truncation depth mismatch: {left} vs {right}")]
    DepthMismatch { left: usize, right: usize },

    #[error("level {requested} exceeds truncation depth {depth}")]
    LevelOutOfRange { requested: usize, depth: usize },

    #[error("{what} must be strictly positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("requested prefix length {requested} exceeds series length {available}")]
    SeriesTooShort { requested: usize, available: usize },

    #[error("empty state: no samples consumed")]
    EmptyState,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("transition graph is not strongly connected")]
    Reducible,

    #[error("transition matrix is periodic with period {0}")]
    Periodic(usize),

    #[error("stationary distribution has zero mass at state {0}")]
    ZeroMass(usize),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("alpha = {alpha} outside the rate-function domain ({lower}, {upper})")]
    OutOfDomain { alpha: f64, lower: f64, upper: f64 },

    #[error("window length: {0}")]
    Window(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("invalid checkpoints: {0}")]
    Checkpoints(String),

    #[error("need at least 2 replications, got {0}")]
    TooFewReplications(usize),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Experiment {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
