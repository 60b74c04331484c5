use thiserror::Error;

/// Errors raised by the library, grouped by the category that decides the CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent run configuration. `path` is the offending key.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// Parameters outside the validity domain of a model or operation.
    #[error("model-domain error: {0}")]
    Domain(String),

    /// A requested basis or matrix would exceed the configured amplitude cap.
    #[error("capacity exceeded: {requested} amplitudes requested, cap is {cap}")]
    Capacity { requested: u128, cap: u128 },

    /// Dimension mismatch between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The model is valid but not supported by the requested operation
    /// (e.g. pseudomode methods with f_j != g_j).
    #[error("unsupported model: {0}")]
    Unsupported(String),

    /// Discretized correlation matrix is not positive semi-definite beyond round-off.
    #[error("invalid correlation function: {0}")]
    InvalidCorrelation(String),

    /// Non-finite values or degenerate trajectories.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A statistical validation check failed.
    #[error("statistical validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }

    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Io(_) => 2,
            Error::Domain(_)
            | Error::Capacity { .. }
            | Error::Dimension(_)
            | Error::Unsupported(_)
            | Error::InvalidCorrelation(_) => 3,
            Error::Numerical(_) => 4,
            Error::Validation(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
