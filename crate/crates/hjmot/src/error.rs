use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Format(String),
    #[error("solution was computed for instance {solution}, not {instance}")]
    HashMismatch { solution: String, instance: String },
    #[error(transparent)]
    Core(#[from] hjmot_core::Error),
}

impl Error {
    /// Process exit code: 3 for infeasible instances, 2 for every other input error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Core(hjmot_core::Error::Infeasible) => 3,
            _ => 2,
        }
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
