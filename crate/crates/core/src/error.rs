use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid probability {value} ({context})")]
    InvalidProbability { context: String, value: f64 },

    #[error("undefined geometry: {0}")]
    UndefinedGeometry(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error("replicate with seed {seed} failed: {source}")]
    Replicate {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Contract(_) | Error::Config(_) => 2,
            Error::InvalidProbability { .. }
            | Error::UndefinedGeometry(_)
            | Error::Numerical(_)
            | Error::TrainingDiverged { .. } => 3,
            Error::Io { .. } | Error::Csv(_) => 4,
            Error::Replicate { source, .. } => source.exit_code(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
