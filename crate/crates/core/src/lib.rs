//! Memory imprint modeling of social interactions.
//!
//! Communication logs are turned into per-alter scores by a memory imprint
//! model, a Hawkes intensity, or one of three baselines. The resulting
//! rankings are compared with survey-derived ground truth by rank-biased
//! overlap under a staggered, leakage-checked cross-validation protocol.

pub mod domain;
pub mod error;
pub mod evaluation;
pub mod groundtruth;
pub mod metrics;
pub mod models;
pub mod synthdata;
pub mod tuning;

pub use domain::{
    AlterAnswer, Channel, Dataset, Event, ParticipantId, Question, QuestionSchema, RankedList,
    SurveyResponse, Timestamp,
};
pub use error::{Error, Result};
