use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("singular matrix in {context} (pivot {pivot})")]
    Singular { context: String, pivot: usize },

    #[error("dense probing needs {columns} columns, limit is {limit}")]
    SizeGuard { columns: usize, limit: usize },

    #[error("eigen solver failed: {0}")]
    Eigen(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
