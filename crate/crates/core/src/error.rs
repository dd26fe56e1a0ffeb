use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("stationary distribution failed: residual {residual:e} after {iterations} iterations")]
    StationaryFailed { residual: f64, iterations: usize },

    #[error("degenerate source: {0}")]
    DegenerateSource(String),

    #[error("capacity zero: reconstruction impossible at any rate")]
    CapacityZero,

    #[error("fixed point did not converge after {iterations} iterations (last iterates: {trace:?})")]
    FixedPoint { iterations: usize, trace: Vec<f64> },

    #[error("transition outside grid ({0})")]
    TransitionOutsideGrid(GridSide),

    #[error("work cap exceeded: {what} needs {required:e} units, cap is {cap:e}")]
    WorkCap {
        what: &'static str,
        required: f64,
        cap: f64,
    },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Which end of a sweep grid the transition lies beyond.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSide {
    BelowMin,
    AboveMax,
}

impl std::fmt::Display for GridSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridSide::BelowMin => f.write_str("below p_min"),
            GridSide::AboveMax => f.write_str("above p_max"),
        }
    }
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config { .. } | Error::Unsupported(_) | Error::Io { .. } => 1,
            Error::WorkCap { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
