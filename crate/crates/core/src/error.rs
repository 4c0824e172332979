use std::path::PathBuf;

use thiserror::Error;

use crate::bits::BitString;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fuel {requested} is beyond the store horizon {horizon}")]
    BeyondHorizon { requested: u64, horizon: u64 },

    #[error("store was enumerated with auxiliary input {store:?}, query asked for {query:?}")]
    AuxMismatch { store: BitString, query: BitString },

    #[error("significance threshold {0} is outside (0, 1]")]
    EpsilonOutOfRange(String),

    #[error("no qualifying program for {x:?} at significance {b}")]
    DepthUndefined { x: BitString, b: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("conflicting verdicts for program {program}: {existing} vs {incoming}")]
    VerdictConflict {
        program: BitString,
        existing: String,
        incoming: String,
    },

    #[error("{path}: line {line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("store not found at {0}")]
    StoreNotFound(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
