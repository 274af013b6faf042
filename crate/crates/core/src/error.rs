//! Error types shared across the crate.

use thiserror::Error;

/// Syntax or semantic error in a query file, with source position.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

/// Error loading or validating a network file.
#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("malformed network file: {0}")]
    Schema(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unsupported activation '{0}'")]
    Activation(String),
}

/// Top-level verification errors.
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("query/network arity mismatch: {0}")]
    Arity(String),
    #[error("region enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("io error: {0}")]
    Io(String),
}
