use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad config value or malformed file; `key` is the dotted path.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("simulation error: {0}")]
    Model(#[from] sairs_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("verification failed for criteria {failed:?}")]
    VerifyFailed { failed: Vec<usize> },
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl ToString) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for bad input, 2 for runtime failures, 3 for a failed verify run.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 1,
            CliError::Model(_) | CliError::Io { .. } => 2,
            CliError::VerifyFailed { .. } => 3,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
