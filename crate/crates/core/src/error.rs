use thiserror::Error;

/// Errors produced by the toolkit.
///
/// `Domain` covers violated preconditions (bad inputs), `Contract` covers
/// violated invariants of constructed parameter records, and `Numerical`
/// covers solver failures that carry diagnostics for the caller.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported representation: {0}")]
    UnsupportedRepresentation(String),

    #[error("degenerate loop: {0}")]
    DegenerateLoop(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure in {context}: {diagnostics}")]
    Numerical { context: String, diagnostics: String },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::UnsupportedRepresentation(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn numerical(context: impl Into<String>, diagnostics: impl Into<String>) -> Self {
        Error::Numerical {
            context: context.into(),
            diagnostics: diagnostics.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
