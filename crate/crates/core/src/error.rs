use thiserror::Error;

/// Errors produced by mesh construction, assembly, solves and the optimizer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid inclusion shape: {0}")]
    InvalidShape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("field belongs to a different mesh: {0}")]
    MeshMismatch(String),

    #[error("deformation is not invertible: {0}")]
    NonInvertible(String),

    #[error("linear system could not be solved: {0}")]
    Singular(String),

    #[error("point ({x}, {y}) lies outside the background mesh")]
    PointLocation { x: f64, y: f64 },

    #[error("right-hand side is not in the range of the operator (relative residual {0:e})")]
    Infeasible(f64),

    #[error("line search failed: {0}")]
    LineSearch(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
