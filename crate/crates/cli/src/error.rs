use std::path::PathBuf;

use smfr::SmfrError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("{0}")]
    Core(#[from] SmfrError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// 2 for bad input, 3 for numerical failure, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Parse { .. } => 2,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                SmfrError::NoConvergence { .. }
                | SmfrError::NoValidFactorCount { .. }
                | SmfrError::NoFeasibleCandidate
                | SmfrError::SingularSystem
                | SmfrError::RankCollapse(_)
                | SmfrError::DependentComponents(_)
                | SmfrError::UndefinedMetric(_) => 3,
                _ => 2,
            },
        }
    }

    /// A hint printed after the error, where one helps.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Core(SmfrError::NoValidFactorCount { .. }) => {
                Some("every factor count collapsed; try smaller lambda1/lambda2")
            }
            CliError::Core(SmfrError::RankCollapse(_)) => Some("try fewer components or smaller penalties"),
            CliError::Core(SmfrError::ConstantColumn(_)) => Some("drop constant columns before fitting"),
            CliError::Core(SmfrError::NoConvergence { .. }) => Some("raise the iteration cap or loosen the tolerance"),
            _ => None,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
