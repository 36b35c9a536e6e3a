use std::fmt::Display;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] less_core::Error),

    #[error("aborted after {completed} completed cells")]
    Aborted {
        completed: usize,
        #[source]
        source: Box<HarnessError>,
    },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, err: impl Display) -> Self {
        HarnessError::Parse {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    /// Process exit code: 2 config, 3 numerical degeneracy, 4 resource bound,
    /// 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use less_core::Error as E;
        match self {
            HarnessError::Config(_) | HarnessError::Parse { .. } => 2,
            HarnessError::Core(e) => match e {
                E::NumericalDegeneracy(_) | E::DegenerateFeatures => 3,
                E::ResourceBound(_) => 4,
                _ => 2,
            },
            HarnessError::Aborted { source, .. } => source.exit_code(),
            HarnessError::Io { .. } | HarnessError::Csv(_) => 1,
        }
    }
}
