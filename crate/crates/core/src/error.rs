use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate user position ({x}, {y}): azimuth is undefined at the origin")]
    DegeneratePosition { x: f64, y: f64 },

    #[error("invalid indicator: {0}")]
    InvalidIndicator(String),

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("scheme inapplicable: {0}")]
    SchemeInapplicable(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("exhaustive search refused: {candidates} candidates exceed the enumeration cap of {cap}")]
    EnumerationCap { candidates: u128, cap: u64 },

    #[error("malformed batch file: {0}")]
    BatchFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidArgument(_) => 2,
            Error::SchemeInapplicable(_) | Error::EnumerationCap { .. } => 3,
            Error::Numeric(_) | Error::DegeneratePosition { .. } => 4,
            Error::InvalidIndicator(_) => 2,
            Error::BatchFormat(_) | Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}
