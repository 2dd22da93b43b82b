use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A combinatorial search or retry budget ran out.
    #[error("resource exhausted: {0}")]
    ResourceExhausted(String),

    /// The configuration is well-formed but cannot be satisfied, e.g. a
    /// certificate that does not reach full column rank.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Json(_) => 2,
            Error::Infeasible(_) => 3,
            Error::ResourceExhausted(_) => 4,
            Error::Io(_) => 1,
        }
    }
}
