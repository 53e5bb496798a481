use crate::simplex::LpError;
use crate::symbolic::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    Alphabet(String),

    #[error("invalid subshift: {0}")]
    Subshift(String),

    #[error("invalid chain system:\n{0}")]
    InvalidSystem(ValidationReport),

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("word `{0}` is not admissible")]
    Inadmissible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource cap exceeded: {what} needs {needed}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        needed: String,
        cap: u64,
    },

    #[error("linear program: {0}")]
    Lp(#[from] LpError),

    #[error("invalid measure: {0}")]
    Measure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
