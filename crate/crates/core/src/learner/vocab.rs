use serde::{Deserialize, Serialize};

use super::features::name_hash;
use crate::taskgraph::{IntentionId, TaskGraph, TaskIdx};

/// Intention-head action index of `Do`.
pub const DO_ACTION: usize = 0;
/// Intention-head action index of `Done`.
pub const DONE_ACTION: usize = 1;
const FIRST_TASK_ACTION: usize = 2;

/// Task ids the learner has ever been taught, in order of first appearance.
/// Slots never move, so values learned for a task survive graph changes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    ids: Vec<String>,
}

impl Vocab {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn slot(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Appends unseen ids of `graph`; returns how many were added.
    pub fn extend_with(&mut self, graph: &TaskGraph) -> usize {
        let before = self.ids.len();
        for t in graph.tasks() {
            if self.slot(&t.id).is_none() {
                self.ids.push(t.id.clone());
            }
        }
        self.ids.len() - before
    }

    /// Size of the intention head.
    pub fn action_count(&self) -> usize {
        FIRST_TASK_ACTION + self.ids.len()
    }

    pub fn bind(&self, graph: &TaskGraph) -> Binding {
        let mut action_task = vec![None; self.action_count()];
        let mut task_action = Vec::with_capacity(graph.len());
        for t in graph.task_indices() {
            let a = FIRST_TASK_ACTION + self.slot(graph.id(t)).expect("vocabulary covers the graph");
            action_task[a] = Some(t);
            task_action.push(a);
        }
        let mut available = vec![true; self.action_count()];
        for (a, t) in action_task.iter().enumerate().skip(FIRST_TASK_ACTION) {
            available[a] = t.is_some();
        }
        Binding {
            task_action,
            action_task,
            available,
            task_hash: graph.task_indices().map(|t| name_hash(graph.id(t))).collect(),
        }
    }
}

/// Correspondence between a vocabulary and one task graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    task_action: Vec<usize>,
    action_task: Vec<Option<TaskIdx>>,
    available: Vec<bool>,
    task_hash: Vec<u64>,
}

impl Binding {
    pub fn action_count(&self) -> usize {
        self.action_task.len()
    }

    /// Intention-head actions that name something in the bound graph.
    pub fn available(&self) -> &[bool] {
        &self.available
    }

    pub fn action_of(&self, u: IntentionId) -> usize {
        match u {
            IntentionId::Do => DO_ACTION,
            IntentionId::Done => DONE_ACTION,
            IntentionId::Task(t) => self.task_action[t.0],
        }
    }

    pub fn intention_of(&self, action: usize) -> Option<IntentionId> {
        match action {
            DO_ACTION => Some(IntentionId::Do),
            DONE_ACTION => Some(IntentionId::Done),
            a => self.action_task.get(a).copied().flatten().map(IntentionId::Task),
        }
    }

    /// Stable identity of a task used to key learned values.
    pub fn task_hash(&self, t: TaskIdx) -> u64 {
        self.task_hash[t.0]
    }
}
