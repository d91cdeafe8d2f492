use std::path::PathBuf;
use std::process::ExitCode;

pub type Result<T> = std::result::Result<T, CliError>;

/// Failures of the front end, grouped by the exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// Input files that parse but do not fit together.
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error(transparent)]
    Numeric(#[from] mapf_core::Error),

    #[error("non-finite samples in {0}")]
    NonFinite(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn input(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Input {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 1 usage, 2 I/O, 3 numeric failure.
    pub fn exit_code(&self) -> u8 {
        use mapf_core::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(E::Config(_) | E::FrameConfig(_) | E::Scene(_)) => 1,
            CliError::Io { .. } | CliError::Wav { .. } | CliError::Json { .. } | CliError::Input { .. } => 2,
            CliError::Numeric(_) | CliError::NonFinite(_) => 3,
        }
    }

    pub fn exit(&self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }
}
