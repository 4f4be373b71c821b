//! The hierarchical learner: action values over intentions and primitive
//! actions, stack memory, the teacher-in-the-loop episode and its updates.

mod agent;
mod env;
mod features;
mod hyper;
mod memory;
mod qfunction;
mod replay;
mod updates;
mod vocab;

pub use agent::{EpisodeTrace, IntentionChooser, Learner, Rollout, TraceStep};
pub use env::Env;
pub use features::{name_hash, progress_hash, FeatureMode, Features, Featurizer, Relation, StateView, NO_PROGRESS};
pub use hyper::Hyperparams;
pub use memory::{Frame, StackMemory};
pub use qfunction::{epsilon_greedy, greedy, BackendKind, Head, QConfig, QFunction, QSnapshot, PRIMITIVE_COUNT};
pub use replay::{ReplayBuffer, Transition};
pub use updates::{
    hinge, loop_erased, update_margin, update_primitive_labels, update_rl, update_self_imitation, ActionSpace,
};
pub use vocab::{Binding, Vocab, DONE_ACTION, DO_ACTION};

use thiserror::Error;

use crate::comms::CommsError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LearnerError {
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Teacher(#[from] CommsError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint tasks missing from the graph: {0}")]
    GraphMismatch(String),
}
