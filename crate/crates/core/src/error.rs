use thiserror::Error;

use crate::view::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Unknown or ambiguous attribute, arity or type mismatch.
    #[error("schema error: {0}")]
    Schema(String),

    /// A named relation or view could not be resolved.
    #[error("catalog error: {0}")]
    Catalog(String),

    /// A multiplicity would become negative outside of a signed accumulator.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    /// The scenario asks a maintainer for something its warehouse cannot hold.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid view hierarchy: {0}")]
    Invalid(Diagnostic),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("analytic model: {0}")]
    Analytic(String),
}

impl From<Diagnostic> for Error {
    fn from(d: Diagnostic) -> Self {
        Error::Invalid(d)
    }
}
