use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("outside model validity: {0}")]
    OutOfModel(String),
    #[error("SNU calibration failed: {0}")]
    Calibration(String),
    #[error("phase recovery needs at least 2 pilots, found {found}")]
    InsufficientPilots { found: usize },
    #[error("degenerate link: {0}")]
    DegenerateLink(String),
    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("unphysical state: {0}")]
    Unphysical(String),
    #[error("degenerate measurement: {0}")]
    DegenerateMeasurement(String),
    #[error("reconciliation block has zero norm")]
    DegenerateBlock,
    #[error("scenario validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("unknown parameter path `{0}`")]
    UnknownParameter(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
