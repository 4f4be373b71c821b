use serde::{Deserialize, Serialize};

use super::LearnerError;
use crate::craftworld::WorldState;
use crate::taskgraph::{IntentionId, TaskIdx};

/// A stacked intention together with the state it was pushed in, against which
/// its completion is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub task: TaskIdx,
    pub baseline: WorldState,
}

/// The learner's intention stack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackMemory {
    frames: Vec<Frame>,
}

impl StackMemory {
    pub fn new(main: TaskIdx, state: WorldState) -> Self {
        Self { frames: vec![Frame { task: main, baseline: state }] }
    }

    pub fn top(&self) -> Option<IntentionId> {
        self.frames.last().map(|f| IntentionId::Task(f.task))
    }

    pub fn top_frame(&self) -> Option<&Frame> {
        self.frames.last()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn tasks(&self) -> Vec<TaskIdx> {
        self.frames.iter().map(|f| f.task).collect()
    }

    /// Pushes a task or pops on `Done`; returns the new top, `None` once empty.
    pub fn query(&mut self, action: IntentionId, state: &WorldState) -> Result<Option<IntentionId>, LearnerError> {
        match action {
            IntentionId::Task(task) => self.frames.push(Frame { task, baseline: *state }),
            IntentionId::Done => {
                if self.frames.pop().is_none() {
                    return Err(LearnerError::Protocol("DONE on an empty stack".into()));
                }
            }
            IntentionId::Do => return Err(LearnerError::Protocol("DO is not a memory query".into())),
        }
        Ok(self.top())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::craftworld::{Cell, Inventory};

    fn state() -> WorldState {
        WorldState { agent: Cell::new(0, 0), inventory: Inventory::default(), alive: 0, step_count: 0 }
    }

    #[test]
    fn push_and_pop() {
        let (pork, coal) = (TaskIdx(5), TaskIdx(3));
        let mut m = StackMemory::new(pork, state());
        assert_eq!(m.top(), Some(IntentionId::Task(pork)));
        assert_eq!(m.query(IntentionId::Task(coal), &state()).unwrap(), Some(IntentionId::Task(coal)));
        assert_eq!(m.tasks(), vec![pork, coal]);
        assert_eq!(m.query(IntentionId::Done, &state()).unwrap(), Some(IntentionId::Task(pork)));
        assert_eq!(m.query(IntentionId::Done, &state()).unwrap(), None);
        assert!(m.is_empty());
        assert!(m.query(IntentionId::Done, &state()).is_err());
        assert!(m.query(IntentionId::Do, &state()).is_err());
    }
}
