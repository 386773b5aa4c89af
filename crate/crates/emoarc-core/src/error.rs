//! Error type shared across the toolkit.
//!
//! Every variant belongs to one of three categories that the CLI maps onto
//! exit codes: validation errors (2), coverage/data errors (3), and numeric
//! degeneracies (4).

use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid {what}: {msg}")]
    InvalidValue { what: &'static str, msg: String },

    #[error("annotator {annotator} uses the reduced scheme; label '{label}' is not allowed")]
    SchemeViolation { annotator: u8, label: String },

    #[error("duplicate sentence (story '{story}', index {index})")]
    DuplicateSentence { story: String, index: usize },

    #[error("story '{story}' has no label from annotator {annotator} at sentence {index}")]
    MissingLabel {
        story: String,
        annotator: u8,
        index: usize,
    },

    #[error("no agreement value supplied for story '{story}'")]
    MissingAlpha { story: String },

    #[error("prediction coverage gap: story '{story}', sentence {index}")]
    CoverageGap { story: String, index: usize },

    #[error("unknown story id '{story}'")]
    UnknownStory { story: String },

    #[error("split targets infeasible: {0}")]
    InfeasibleSplit(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("partition '{0}' is empty")]
    EmptyPartition(String),

    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {min} values, got {got}")]
    TooShort { min: usize, got: usize },

    #[error("undefined statistic: {0}")]
    Degenerate(String),

    #[error("model/spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Exit code for the CLI: 2 validation, 3 coverage/data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::InvalidValue { .. }
            | Error::SchemeViolation { .. }
            | Error::DuplicateSentence { .. }
            | Error::InfeasibleSplit(_)
            | Error::EmptyInput(_)
            | Error::LengthMismatch { .. }
            | Error::TooShort { .. }
            | Error::SpecMismatch(_)
            | Error::Config(_) => 2,
            Error::Io { .. }
            | Error::MissingLabel { .. }
            | Error::MissingAlpha { .. }
            | Error::CoverageGap { .. }
            | Error::UnknownStory { .. }
            | Error::EmptyPartition(_) => 3,
            Error::Degenerate(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
