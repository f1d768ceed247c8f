use std::io;

use thiserror::Error;

/// Errors produced by graph loading, configuration and experiment setup.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: expected `follower leader`, found {tokens} token(s)")]
    Parse { line: usize, tokens: usize },

    #[error("edge list contains no edges")]
    EmptyGraph,

    #[error("pruning with degree threshold {threshold} removed every node")]
    EmptyAfterPrune { threshold: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("{0}")]
    Config(String),

    #[error("config line {line}: {message}")]
    ConfigLine { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Param {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
