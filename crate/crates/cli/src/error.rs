use std::path::PathBuf;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const RUNTIME: i32 = 1;
    pub const MALFORMED: i32 = 2;
    pub const BREACH: i32 = 3;
    pub const ORACLE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}:{line}: {field}: {message}")]
    Malformed {
        origin: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] rvm_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use rvm_core::Error as E;
        match self {
            CliError::Malformed { .. } | CliError::Usage(_) => exit::MALFORMED,
            CliError::Io { .. } => exit::RUNTIME,
            CliError::Core(e) => match e {
                E::InvalidScenario(_) | E::UnknownStrategy { .. } => exit::MALFORMED,
                E::Diverged { .. } | E::SpeedLimit { .. } | E::NoEnvelope { .. } => exit::BREACH,
                _ => exit::RUNTIME,
            },
        }
    }
}
