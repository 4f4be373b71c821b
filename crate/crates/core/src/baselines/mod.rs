//! Comparison agents sharing the simulator, teachers and cost ledger: flat
//! imitation (FIL), flat reinforcement learning (FRL), hierarchical imitation
//! (HIL) and active hierarchical imitation (AHIL).

mod flat;
mod hierarchical;

pub use flat::{FlatImitation, FlatReinforcement};
pub use hierarchical::{HierarchicalImitation, SuccessPredictor};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::comms::{CostLedger, Teacher};
use crate::craftworld::WorldState;
use crate::learner::{Env, Learner, LearnerError};
use crate::taskgraph::TaskIdx;

/// Training method selected in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ceil,
    CeilNoJcom,
    Fil,
    Frl,
    Hil,
    Ahil,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Ceil, Method::CeilNoJcom, Method::Fil, Method::Frl, Method::Hil, Method::Ahil];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ceil => "ceil",
            Method::CeilNoJcom => "ceil_no_jcom",
            Method::Fil => "fil",
            Method::Frl => "frl",
            Method::Hil => "hil",
            Method::Ahil => "ahil",
        }
    }

    /// Whether the method uses the intention hierarchy at test time.
    pub fn is_hierarchical(self) -> bool {
        !matches!(self, Method::Fil | Method::Frl)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// What the harness needs to know about one training episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeSummary {
    /// Declared main task and every task named verbally, in order.
    pub uttered: Vec<TaskIdx>,
    pub success: bool,
    pub requests: u64,
}

/// A trainable agent driven by the experiment harness.
pub trait Trainee: Send + Sync {
    fn method(&self) -> Method;

    fn train_episode(
        &mut self,
        env: &mut Env,
        teacher: &mut dyn Teacher,
        main: TaskIdx,
        start: WorldState,
        epsilon: f64,
        ledger: &mut CostLedger,
    ) -> Result<EpisodeSummary, LearnerError>;

    /// Teacher-free test run; true iff the main task was completed.
    fn evaluate(&self, env: &Env, main: TaskIdx, start: WorldState) -> bool;

    fn learner(&self) -> &Learner;

    fn learner_mut(&mut self) -> &mut Learner;
}

/// The communication-efficient learner, optionally without temporal-difference updates.
#[derive(Debug, Clone)]
pub struct CeilAgent {
    learner: Learner,
}

impl CeilAgent {
    pub fn new(learner: Learner) -> Self {
        Self { learner }
    }
}

impl Trainee for CeilAgent {
    fn method(&self) -> Method {
        if self.learner.no_jcom() {
            Method::CeilNoJcom
        } else {
            Method::Ceil
        }
    }

    fn train_episode(
        &mut self,
        env: &mut Env,
        teacher: &mut dyn Teacher,
        main: TaskIdx,
        start: WorldState,
        epsilon: f64,
        ledger: &mut CostLedger,
    ) -> Result<EpisodeSummary, LearnerError> {
        let trace = self.learner.run_episode(env, teacher, main, start, epsilon, ledger)?;
        self.learner.train();
        Ok(EpisodeSummary { requests: trace.requests(), success: trace.success, uttered: trace.uttered })
    }

    fn evaluate(&self, env: &Env, main: TaskIdx, start: WorldState) -> bool {
        self.learner.rollout(env, main, start).success
    }

    fn learner(&self) -> &Learner {
        &self.learner
    }

    fn learner_mut(&mut self) -> &mut Learner {
        &mut self.learner
    }
}
