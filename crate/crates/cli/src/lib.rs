//! Library side of the `uplink-outage` command: configuration parsing,
//! experiment invocation and bit-stable CSV/JSON output.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{parse_config, parse_config_str};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Numerical(uplink_outage::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Config(_) | CliError::Io { .. } => exit::CONFIG,
            CliError::Numerical(_) => exit::NUMERICAL,
        }
    }
}

impl From<uplink_outage::Error> for CliError {
    fn from(e: uplink_outage::Error) -> Self {
        match e {
            uplink_outage::Error::Config(msg) => CliError::Config(msg),
            other => CliError::Numerical(other),
        }
    }
}
