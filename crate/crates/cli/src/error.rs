use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] coxbo::Error),

    #[error("{0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    /// Bad command line, including `--help` and `--version` requests.
    #[error(transparent)]
    Usage(#[from] clap::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// Category printed as `error[<category>]`: the core categories plus
    /// `config`, `parse`, `io` and `usage`.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.category(),
            CliError::Config(_) => "config",
            CliError::Parse { .. } => "parse",
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
