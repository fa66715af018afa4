//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced while validating inputs or running the miner.
#[derive(Debug, Error)]
pub enum Error {
    /// A dataset or attribute-set failed structural validation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// One or more attributes are constant (single observed state); such
    /// columns carry no information and must be removed before mining.
    #[error("constant attribute(s) not allowed: {}", .0.join(", "))]
    ConstantAttributes(Vec<String>),

    /// A requested table would exceed addressable size.
    #[error("contingency table too large: {0}")]
    TableTooLarge(String),
}

impl Error {
    /// Convenience constructor for [`Error::InvalidInput`].
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Convenience constructor for [`Error::InvalidConfig`].
    pub fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
