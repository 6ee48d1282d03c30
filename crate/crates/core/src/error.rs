use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator and its analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented invariant.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// An enumeration would exceed the configured size cap.
    #[error("resource limit exceeded: {needed} basis states requested, cap is {cap}")]
    ResourceLimit { needed: u128, cap: u128 },

    /// A mode label outside `0..modes`.
    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    /// A focal-plane position outside the computed window.
    #[error("position {x:.6e} m lies outside the computed focal-plane window [{lo:.6e}, {hi:.6e}] m")]
    OutsideWindow { x: f64, lo: f64, hi: f64 },

    /// A ratio whose denominator vanished.
    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {reason}")]
    Parse { context: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
