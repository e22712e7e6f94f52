use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error at line {line}: {msg}")]
    Validation { line: usize, msg: String },

    #[error("invalid argument `{field}`: {msg}")]
    InvalidArgument { field: &'static str, msg: String },

    #[error("config line {line}: `{field}`: {msg}")]
    Config { line: usize, field: String, msg: String },

    #[error("negative sampling failed: needed {needed}, found {found} after {attempts} attempts")]
    NegativeSampling {
        needed: usize,
        found: usize,
        attempts: usize,
    },

    #[error("not enough eligible node pairs: needed {needed}, only {available} available (short by {})", needed - available)]
    InsufficientPairs { needed: usize, available: usize },

    #[error("node pair ({0}, {1}) is already linked")]
    AlreadyLinked(usize, usize),

    #[error("invalid node pair ({0}, {1}): {2}")]
    InvalidPair(usize, usize, String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by the caller's input (bad flags, config values, files)
    /// rather than by a computation that went wrong.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation { .. }
                | Error::InvalidArgument { .. }
                | Error::Config { .. }
                | Error::Io { .. }
                | Error::Json(_)
        )
    }

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(field: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
