use crate::domain::{ParticipantId, Timestamp};
use thiserror::Error;

/// Errors raised by the modeling and evaluation pipeline.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A participant id that the dataset has never seen.
    #[error("participant {0} not found in dataset")]
    NotFound(ParticipantId),
    /// A time-ordered operation received an out-of-order timestamp.
    #[error("ordering violation: timestamp {got} precedes {last}")]
    OrderingViolation { last: Timestamp, got: Timestamp },
    /// Survey answers inconsistent with the question schema.
    #[error("schema error: {0}")]
    Schema(String),
    /// Input data breaking a domain invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// Bad run configuration (unknown model, too few egos, empty space...).
    #[error("configuration error: {0}")]
    Config(String),
    /// A parameter vector outside the model's admissible region.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// Training touched data it is not allowed to see.
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    /// Weighted mean requested over entries that all carry zero weight.
    #[error("weighted average undefined: all weights are zero")]
    UndefinedAverage,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
