use thiserror::Error;

/// Errors raised by the certification library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LightconeError {
    /// An argument lies outside the mathematical domain of the operation
    /// (strip violation, overlapping regions, malformed tables, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// A configured size cap was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),
    /// Dimensions of operands disagree.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("serialization: {0}")]
    Serialization(String),
}

impl LightconeError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        LightconeError::Domain(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        LightconeError::Resource(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, LightconeError>;
