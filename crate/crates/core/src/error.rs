use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text; `line` is 1-based.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("duplicate identifier `{0}`")]
    Duplicate(String),

    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Traffic that cannot reach its destination under the given weights.
    #[error("destination `{dst}` unreachable from `{src}`")]
    Unreachable { src: String, dst: String },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by the instance itself rather than by its encoding.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Unreachable { .. } | Error::Internal(_))
    }
}
