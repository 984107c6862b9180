use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("operator is identically zero (edgeless graph)")]
    ZeroOperator,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("batch norm in training mode needs at least 2 samples, got {0}")]
    BatchTooSmall(usize),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("no edges available for relation pair selection")]
    NoEdges,
    #[error("pair ({0}, {1}) out of range for {2} objects")]
    PairIndexOutOfRange(usize, usize, usize),
    #[error("{pairs} ordered pairs exceed the pair budget of {budget}")]
    PairBudgetExceeded { pairs: usize, budget: usize },
    #[error("average degree {avg_degree} infeasible for {n} vertices")]
    DegreeInfeasible { avg_degree: f64, n: usize },
    #[error("covariance has no off-diagonal entries; graph would be empty")]
    EmptyGraph,
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("join error: {0}")]
    Join(String),
    #[error("no genes shared between expression matrix and edge list")]
    EmptyIntersection,
    #[error("class {class} has {count} samples; stratified splitting needs at least 2")]
    ClassTooSmall { class: usize, count: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }

    /// True for errors caused by input data rather than by the caller's usage.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Config(_))
    }
}
