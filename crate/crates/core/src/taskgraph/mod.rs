//! The intention hierarchy and the ground-truth planner behind teacher feedback.

mod graph;
mod levels;
mod planner;

pub use graph::{load_graph, IntentionId, Task, TaskGraph, TaskIdx};
pub use levels::{LevelGroup, LevelTable};
pub use planner::{bfs_plan, plan, valid_next_intentions, PlanCache, ValidSet, DEFAULT_SEARCH_LIMIT};

use thiserror::Error;

use crate::craftworld::CraftError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("task graph parse error: {0}")]
    Parse(String),
    #[error("duplicate {what} `{name}`")]
    Duplicate { what: &'static str, name: String },
    #[error("`{0}` is a reserved intention symbol")]
    Reserved(String),
    #[error("task `{task}` refers to unknown {what} `{name}`")]
    Unknown { task: String, what: &'static str, name: String },
    #[error("cycle in the parent relation through `{0}`")]
    Cycle(String),
    #[error("task `{task}` requires {required:?} but its children produce {produced:?}")]
    RecipeMismatch { task: String, required: Vec<String>, produced: Vec<String> },
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error(transparent)]
    World(#[from] CraftError),
    #[error("task `{task}` cannot be completed in the reference layout: {reason}")]
    Unreachable { task: String, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("no plan exists")]
    Unreachable,
    #[error("search exceeded {0} states")]
    SearchLimit(usize),
    #[error("the current intention is not a task")]
    NotATask,
}
