use thiserror::Error;

use crate::clustering::ClusterError;
use crate::diagnostics::TestError;
use crate::estimators::EstimationError;
use crate::panel::PanelError;
use crate::sarimax::SarimaxError;
use crate::selection::SelectionError;

/// Failure class, used for process exit codes and message prefixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numeric,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 1,
            ErrorCategory::Data => 2,
            ErrorCategory::Numeric => 3,
        }
    }

    pub fn prefix(self) -> &'static str {
        match self {
            ErrorCategory::Config => "E_CONFIG",
            ErrorCategory::Data => "E_DATA",
            ErrorCategory::Numeric => "E_NUMERIC",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Test(#[from] TestError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Sarimax(#[from] SarimaxError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Config,
            Error::Panel(_) | Error::Io { .. } => ErrorCategory::Data,
            Error::Estimation(EstimationError::Panel(_)) => ErrorCategory::Data,
            Error::Estimation(EstimationError::InvalidSpec(_)) => ErrorCategory::Config,
            Error::Test(TestError::Panel(_)) => ErrorCategory::Data,
            Error::Selection(SelectionError::Panel(_)) => ErrorCategory::Data,
            Error::Selection(SelectionError::InvalidParameter(_)) => ErrorCategory::Config,
            Error::Sarimax(SarimaxError::Panel(_)) => ErrorCategory::Data,
            Error::Cluster(ClusterError::Panel(_)) => ErrorCategory::Data,
            Error::Cluster(ClusterError::InvalidK { .. }) => ErrorCategory::Config,
            Error::Estimation(_) | Error::Test(_) | Error::Selection(_) | Error::Sarimax(_) | Error::Cluster(_) | Error::Json(_) => {
                ErrorCategory::Numeric
            }
        }
    }
}
