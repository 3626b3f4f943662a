use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("malformed spec: {0}")]
    Spec(String),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] robustmd_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("report contains a non-finite number in {0}")]
    NonFinite(String),
}

impl CliError {
    /// 2 for infeasible ambiguity sets, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(robustmd_core::Error::Infeasible) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
