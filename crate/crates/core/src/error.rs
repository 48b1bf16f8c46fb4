use thiserror::Error;

use crate::platform::ChipletId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model spec: {0}")]
    InvalidModel(String),
    #[error("invalid sequence config: {0}")]
    InvalidSequence(String),
    #[error("invalid system config: {0}")]
    InvalidSystem(String),
    #[error("placement failed: {0}")]
    Placement(String),
    #[error("chiplet {0} is not part of the platform")]
    UnknownChiplet(ChipletId),
    #[error("no route between routers {from} and {to}; design is disconnected")]
    Unroutable { from: usize, to: usize },
    #[error("ReRAM array has zero cell capacity")]
    ZeroCapacity,
    #[error("zero throughput for {0}")]
    ZeroThroughput(String),
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error("mismatched workloads: {0}")]
    Mismatch(String),
    #[error("archive is empty")]
    EmptyArchive,
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "invalid_model",
            Error::InvalidSequence(_) => "invalid_sequence",
            Error::InvalidSystem(_) => "invalid_system",
            Error::Placement(_) => "placement",
            Error::UnknownChiplet(_) => "unknown_chiplet",
            Error::Unroutable { .. } => "unroutable",
            Error::ZeroCapacity => "zero_capacity",
            Error::ZeroThroughput(_) => "zero_throughput",
            Error::Trace(_) => "trace",
            Error::Mismatch(_) => "mismatch",
            Error::EmptyArchive => "empty_archive",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
