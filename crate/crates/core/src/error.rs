use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid too coarse: {support_nodes} nodes inside the support, need at least {required}")]
    GridTooCoarse {
        support_nodes: usize,
        required: usize,
    },
    #[error("profile does not vanish at the grid endpoints (|w| = {value:e})")]
    BoundaryNotZero { value: f64 },
    #[error("not separable: {0}")]
    NonSeparable(String),
    #[error("resonance mismatch: {0}")]
    ResonanceMismatch(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }

    pub(crate) fn grid(msg: impl Into<String>) -> Self {
        Error::InvalidGrid(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
