use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration field failed to parse or validate. `field` is written
    /// as `[section].key`.
    #[error("config error{}: {field}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        field: String,
        line: Option<usize>,
        message: String,
    },

    #[error("stall: airspeed {speed} is below the floor {floor}")]
    Stall { speed: f64, floor: f64 },

    #[error("gimbal lock: |cos(flight-path angle)| = {cos_gamma:e}")]
    Gimbal { cos_gamma: f64 },

    /// A dynamics failure inside a running simulation.
    #[error("simulation aborted at t = {time} (agent {agent}): {source}")]
    Aborted {
        agent: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error at row {row}: {message}")]
    Schema { row: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the configuration rather than by running it.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::InvalidInput(_))
    }
}
