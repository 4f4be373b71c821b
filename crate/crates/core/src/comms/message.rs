use serde::{Deserialize, Serialize};

use crate::craftworld::{PrimitiveAction, WorldState};
use crate::taskgraph::IntentionId;

/// Primitive rollout of one intention: `steps[k] = (s^k, a^k)`, ending in `end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<(WorldState, PrimitiveAction)>,
    pub end: WorldState,
    /// The step cap stopped the rollout before the policy chose `Terminate`.
    pub capped: bool,
}

impl Trajectory {
    pub fn start(&self) -> &WorldState {
        self.steps.first().map_or(&self.end, |(s, _)| s)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn actions(&self) -> impl Iterator<Item = PrimitiveAction> + '_ {
        self.steps.iter().map(|(_, a)| *a)
    }
}

/// A learner turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Utterance {
    /// Names an intention (a task or `Done`).
    Verbal(IntentionId),
    /// Executes the current intention.
    Execute(Trajectory),
}

/// A teacher turn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Feedback {
    Instructive { correct: IntentionId, was_learner_correct: bool },
    Evaluative { score: f64 },
}

impl Feedback {
    pub fn correct_label(&self) -> Option<IntentionId> {
        match *self {
            Feedback::Instructive { correct, .. } => Some(correct),
            Feedback::Evaluative { .. } => None,
        }
    }

    pub fn score(&self) -> Option<f64> {
        match *self {
            Feedback::Evaluative { score } => Some(score),
            Feedback::Instructive { .. } => None,
        }
    }
}
