use std::path::{Path, PathBuf};

/// Failure of a command-line run, grouped by process exit code.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Infeasible(_) => 3,
            RunError::Io { .. } | RunError::MissingArtifact(_) => 4,
            RunError::Numeric(_) => 5,
        }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        RunError::Io { path: path.as_ref().to_path_buf(), source }
    }
}

impl From<shepherd_core::Error> for RunError {
    fn from(e: shepherd_core::Error) -> Self {
        use shepherd_core::Error as E;
        match e {
            E::Infeasible { .. } => RunError::Infeasible(e.to_string()),
            E::Numeric(_) => RunError::Numeric(e.to_string()),
            E::Sink(ref msg) => RunError::io("training output", std::io::Error::other(msg.clone())),
            _ => RunError::Config(e.to_string()),
        }
    }
}

pub type Result<T, E = RunError> = std::result::Result<T, E>;
