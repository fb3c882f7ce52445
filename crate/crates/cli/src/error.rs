use std::path::PathBuf;

use ssi_core::Quarter;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: line {line}: {msg}")]
    Schema {
        path: String,
        line: u64,
        msg: String,
    },
    #[error("{path}: duplicate bin for {key} on lines {first} and {second}")]
    DuplicateBin {
        path: String,
        key: String,
        first: u64,
        second: u64,
    },
    #[error("{path}: bins of {key} are not contiguous between lines {first} and {second}")]
    NonContiguousBins {
        path: String,
        key: String,
        first: u64,
        second: u64,
    },
    #[error("{path}: line {line}: negative probability {value}")]
    NegativeProbability { path: String, line: u64, value: f64 },
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },
    #[error("{path}: quarter {quarter} appears on lines {first} and {second}")]
    DuplicateQuarter {
        path: String,
        quarter: Quarter,
        first: u64,
        second: u64,
    },
    #[error("series share no quarters after shifting the target by {horizon}")]
    NoOverlap { horizon: usize },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Core {
        context: String,
        source: ssi_core::Error,
    },
}

impl CliError {
    /// 1 for bad input or configuration, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } => match source {
                ssi_core::Error::NumericalFailure(_)
                | ssi_core::Error::ConvergenceFailure(_)
                | ssi_core::Error::RankDeficient => 2,
                _ => 1,
            },
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attach a short description of the failing step to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for ssi_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| CliError::Core {
            context: what(),
            source,
        })
    }
}
