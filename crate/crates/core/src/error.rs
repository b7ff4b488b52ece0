use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Caller violated a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A law or parameter set could not be built with the requested properties.
    #[error("construction failed: {0}")]
    Construction(String),
    /// Work or memory budget exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// Numerical procedure failed (bracketing, convergence, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Invalid solver or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
