use speckle_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{stage}: {source}")]
    Runtime {
        stage: &'static str,
        #[source]
        source: Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    /// 2 for usage and configuration problems, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Runtime { .. } | CliError::Io { .. } => 3,
        }
    }

    pub fn runtime(stage: &'static str) -> impl FnOnce(Error) -> CliError {
        move |source| CliError::Runtime { stage, source }
    }

    pub fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
