use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The integration left the finite/bounded region. `time` is the first
    /// step end (or stage start) at which the state was found divergent.
    #[error("numerical blow-up at t = {time}")]
    BlowUp { time: f64 },

    #[error("non-finite state passed to the right-hand side")]
    NonFiniteState,

    #[error("normal matrix is singular or too ill-conditioned to factor")]
    SingularNormalMatrix,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("limited regime precondition not met: {0}")]
    PreconditionNotMet(String),

    #[error("empty input")]
    EmptyInput,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    pub fn is_blow_up(&self) -> bool {
        matches!(self, Error::BlowUp { .. } | Error::NonFiniteState)
    }
}
