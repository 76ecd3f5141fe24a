use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("{operation} requires an {required} number of grid points, got N = {n}")]
    Parity {
        operation: &'static str,
        required: &'static str,
        n: usize,
    },

    #[error("singular linear system: pivot {pivot:.3e} at row {row} (scale {scale:.3e})")]
    Singular { row: usize, pivot: f64, scale: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("step {step} failed: {source}")]
    StepFailed { step: u64, source: Box<Error> },
}

impl Error {
    /// Stable short identifier, for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid-grid",
            Error::GridMismatch => "grid-mismatch",
            Error::Parity { .. } => "parity",
            Error::Singular { .. } => "singular",
            Error::NonConvergence { .. } => "non-convergence",
            Error::Dimension { .. } => "dimension",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::StepFailed { source, .. } => source.kind(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
