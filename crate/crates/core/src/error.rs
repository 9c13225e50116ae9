use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("tower level {level} exceeds the configured cap {cap}")]
    LevelTooLarge { level: u32, cap: u32 },
    #[error("{value} lies outside [0,1)")]
    OutOfDomain { value: f64 },
    #[error("value {0} is outside [0,1]")]
    OutOfRange(String),
    #[error("Conlon-Fox parameter m={0} must lie in 1..=62")]
    MTooLarge(u32),
    #[error("tail bound {bound:e} cannot meet tolerance {tol:e}")]
    TailNotConvergent { bound: f64, tol: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("work budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("too many blocks for exhaustive search: {blocks} > {limit}")]
    TooManyBlocks { blocks: usize, limit: usize },
    #[error("partition part {0} is null")]
    NullPart(usize),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("incompatible decorated graphs: {0}")]
    IncompatibleGraphs(String),
    #[error("no expected degree within tolerance of sampled degree {degree} at x={x}")]
    DegreeUnassignable { x: f64, degree: f64 },
    #[error("part {part}: measure {found} deviates from expected {expected}")]
    MeasureMismatch {
        part: String,
        found: f64,
        expected: f64,
    },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
