use std::path::PathBuf;

/// Errors surfaced by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    InvalidArg(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("backward requires a scalar root, node has length {0}")]
    NonScalarRoot(usize),
    #[error("incompatible configuration: {0}")]
    Incompatible(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error in {what}: {msg}")]
    Parse { what: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(what: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            what: what.into(),
            msg: msg.into(),
        }
    }
}

pub(crate) fn check_len(op: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimMismatch { op, expected, got })
    }
}
