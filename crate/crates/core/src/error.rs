use thiserror::Error;

use crate::signals::VitalChannel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("field count {found} != 6")]
    FieldCount { found: usize },

    #[error("field {field}: cannot parse {text:?}")]
    Malformed { field: &'static str, text: String },

    #[error("{channel} {text} outside plausibility {lo}-{hi}")]
    Implausible {
        channel: VitalChannel,
        text: String,
        lo: f64,
        hi: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("LMS filter diverged at step {step}; reduce mu")]
    FilterDiverged { step: usize },

    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("timestamp regression: {current} after {previous}")]
    TimestampRegression { previous: i64, current: i64 },

    #[error("model file version {found} is not supported (expected v1)")]
    VersionMismatch { found: String },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("traces are misaligned: {0}")]
    Misaligned(String),

    #[error("anomaly schedule: {0}")]
    Schedule(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
