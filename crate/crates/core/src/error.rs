use thiserror::Error;

use crate::model::VehicleId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("guard unavailable: need at least 2 vehicles, have {0}")]
    GuardUnavailable(usize),

    #[error("stale beacon from {sender}: timestamp {got} ms older than stored {stored} ms")]
    StaleBeacon {
        sender: VehicleId,
        stored: u64,
        got: u64,
    },

    #[error("zero channel capacity (snr = {snr})")]
    ZeroCapacity { snr: f64 },

    #[error("unstable queue: service rate {service} <= arrival rate {arrival}")]
    UnstableQueue { arrival: f64, service: f64 },

    #[error("accounting error: dropped {dropped} > emitted {emitted}")]
    Accounting { emitted: u64, dropped: u64 },

    #[error("invalid value for `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("trace ingestion error at {path}: {reason}")]
    Trace { path: String, reason: String },

    #[error("sweep cell failed (value {value}, seed {seed}): {source}")]
    Sweep {
        value: f64,
        seed: u64,
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::Parse(_) | Error::Trace { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
