use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record in a line-oriented file could not be accepted. `line` is 1-based.
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },

    #[error("invalid camera configuration: {0}")]
    Camera(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("degenerate span on axis {axis}: |g - x0| = {span:e} is below {limit:e}")]
    DegenerateSpan { axis: usize, span: f64, limit: f64 },

    #[error("basis function {index} has no phase support in the fitting data")]
    NoPhaseSupport { index: usize },

    #[error("integration diverged at step {step}")]
    Diverged { step: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("singular Jacobian (condition number {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("model file: {0}")]
    Model(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn record(line: usize, message: impl Into<String>) -> Self {
        Error::Record {
            line,
            message: message.into(),
        }
    }
}
