use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    /// The state reached the circle of curvature centres (1 - e_D kappa_D = 0).
    #[error("curvature-center singularity: 1 - e_D*kappa_D = {value:e} at s_D = {s}")]
    Singularity { s: f64, value: f64 },

    #[error("path untrackable for sensor offset: |d*kappa| = {0} >= 1")]
    Untrackable(f64),

    #[error("closest-point projection failed: {0}")]
    Projection(String),

    #[error("integration aborted at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {message}")]
    Csv { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code for the command-line front end:
    /// 2 config, 3 domain/singularity, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter { .. } | Error::InvalidPath(_) => 2,
            Error::Io { .. } | Error::Csv { .. } => 4,
            Error::Domain(_)
            | Error::Singularity { .. }
            | Error::Untrackable(_)
            | Error::Projection(_)
            | Error::Integration { .. } => 3,
        }
    }
}

/// Problems found while reading a configuration file. Every variant names
/// the offending key(s).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("malformed TOML: {0}")]
    Syntax(String),

    #[error("missing required key(s): {}", .0.join(", "))]
    Missing(Vec<String>),

    #[error("unknown key(s): {}", .0.join(", "))]
    Unknown(Vec<String>),

    #[error("key `{key}`: expected {expected}")]
    Type { key: String, expected: &'static str },

    #[error("key `{key}`: unit suffix mismatch in {value:?} (expected {expected})")]
    Unit {
        key: String,
        value: String,
        expected: &'static str,
    },

    #[error("key `{key}`: unknown variant {value:?} (expected full | naive | unwrapped | linear)")]
    Variant { key: String, value: String },

    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}
