use alloc::string::String;

/// Errors raised by the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("size limit exceeded: {what} = {got}, limit {limit}")]
    SizeLimit { what: &'static str, got: usize, limit: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("division by a series with zero constant term")]
    Division,
    #[error("composition needs an inner series with zero constant term")]
    CompositionDomain,
    #[error("reversion needs f(0) = 0 and f'(0) != 0")]
    ReversionDomain,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("incomplete cumulant table: missing entry for {0}")]
    IncompleteTable(String),
    #[error("oracle failure on word {word}: {reason}")]
    Oracle { word: String, reason: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
