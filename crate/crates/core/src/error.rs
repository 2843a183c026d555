use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Variants are split into configuration problems (bad inputs supplied by a
/// caller) and runtime failures; [`Error::is_config`] tells them apart so the
/// CLI can map them onto distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("index ({row}, {col}) out of range for {rows}x{cols} game")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("game has no pure equilibrium")]
    NoPureEquilibrium,

    #[error("empty active set")]
    EmptyActiveSet,

    #[error("non-finite observation {0}")]
    NonFiniteObservation(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("round {round} beyond last round {last}")]
    RoundOutOfRange { round: usize, last: usize },

    #[error("minimax solver failed ({reason}) on matrix {matrix}")]
    Solver { reason: String, matrix: String },

    #[error("rejection sampling gave up after {attempts} attempts (acceptance rate {rate})")]
    RejectionCapExceeded { attempts: usize, rate: f64 },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True when the error stems from caller-supplied configuration.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidMatrix(_)
                | Error::IndexOutOfRange { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidParameter(_)
                | Error::RoundOutOfRange { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
