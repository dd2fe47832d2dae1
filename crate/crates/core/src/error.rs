use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (sizes, domains, time order).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A configuration value violates an invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The plant produced a non-finite state.
    #[error("numerical divergence at t = {t} s: {detail}")]
    Divergence { t: f64, detail: String },

    #[error("config file {path}: {source}")]
    ConfigSyntax {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

/// Returns a contract error unless `len == expected`.
pub(crate) fn check_len(what: &str, len: usize, expected: usize) -> Result<()> {
    if len == expected {
        Ok(())
    } else {
        Err(Error::contract(format!(
            "{what}: length {len} does not match expected {expected}"
        )))
    }
}
