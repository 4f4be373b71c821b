//! Teacher-learner protocol: utterances, feedback, simulated teachers and cost
//! accounting.

mod cost;
mod message;
mod teacher;

pub use cost::{CostLedger, CostSchedule, FeedbackKind};
pub use message::{Feedback, Trajectory, Utterance};
pub use teacher::{SimulatedTeacher, SuccessStats, Teacher, TeacherVariant, TeachingContext, PERFORMANCE_SMOOTHING};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommsError {
    #[error("empty valid set")]
    EmptyValidSet,
    #[error("the current intention is not a task")]
    NotATask,
    #[error("teacher session ended")]
    Aborted,
}
