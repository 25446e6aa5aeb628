use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "eigensolver did not converge after {iterations} iterations (residuals: {residuals:?})"
    )]
    NonConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    /// `UᵀU*` is numerically singular: the two subspaces are close to orthogonal.
    #[error("degenerate alignment: smallest singular value of H is {min_singular_value:e}")]
    DegenerateAlignment { min_singular_value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
