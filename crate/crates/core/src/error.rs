use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A quantity was evaluated outside the region where it is defined,
    /// e.g. a transmission rate for a zero bandwidth share.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The bandwidth subproblem has no active link.
    #[error("degenerate allocation problem: {0}")]
    Degenerate(String),

    #[error("numeric oracle did not converge after {iterations} iterations (last costs: {trace:?})")]
    NonConvergence { iterations: usize, trace: Vec<f64> },

    #[error("training failed: {0}")]
    Training(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("config error: {0}")]
    Config(String),

    /// Wraps a failure from a lower layer with the frame it happened in.
    #[error("frame {frame}: {source}")]
    Frame {
        frame: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_frame(self, frame: u64) -> Self {
        Error::Frame {
            frame,
            source: Box::new(self),
        }
    }
}
