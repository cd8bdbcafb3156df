use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

impl HarnessError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io { .. } | HarnessError::Csv { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<retroplan_core::Error> for HarnessError {
    fn from(e: retroplan_core::Error) -> Self {
        use retroplan_core::Error as E;
        match e {
            E::InvalidInput(_) | E::Layout { .. } => HarnessError::Config(e.to_string()),
            E::NumericalFailure { .. } | E::DegenerateDistribution { .. } => {
                HarnessError::Numerical(e.to_string())
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
