use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;

use super::features::StateView;
use super::qfunction::Head;

/// One learner decision and its outcome.
#[derive(Debug, Clone)]
pub struct Transition {
    pub head: Head,
    pub state: Arc<StateView>,
    /// Identity hash of the intention the decision was conditioned on.
    pub intention: u64,
    pub action: usize,
    /// Negative communication cost.
    pub reward: f64,
    pub next_state: Arc<StateView>,
    /// Intention after the decision; `None` when the stack emptied.
    pub next_intention: Option<u64>,
    pub terminal: bool,
    /// Action named by instructive feedback.
    pub label: Option<usize>,
    /// Evaluative score, if the decision was an execution.
    pub score: Option<f64>,
}

/// Bounded FIFO of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, items: VecDeque::with_capacity(capacity.min(4096)) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    /// `n` indices drawn uniformly with replacement.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<&Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| &self.items[rng.gen_range(0..self.items.len())]).collect()
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::craftworld::{Cell, Inventory, Observation, WorldState};
    use crate::learner::features::Features;
    use crate::util::rng_from;

    fn transition(action: usize) -> Transition {
        let view = Arc::new(StateView {
            state: WorldState { agent: Cell::new(0, 0), inventory: Inventory::default(), alive: 0, step_count: 0 },
            obs: Observation { height: 0, width: 0, channels: 0, data: Vec::new() },
            features: Features {
                exact: 0,
                inventory: 0,
                held: Vec::new(),
                progress: crate::learner::features::NO_PROGRESS,
                relations: Vec::new(),
                dense: Vec::new(),
            },
        });
        Transition {
            head: Head::Intention,
            state: view.clone(),
            intention: 0,
            action,
            reward: -0.01,
            next_state: view,
            next_intention: None,
            terminal: true,
            label: None,
            score: None,
        }
    }

    #[test]
    fn capacity_is_respected_and_oldest_evicted() {
        let mut b = ReplayBuffer::new(3);
        for a in 0..5 {
            b.push(transition(a));
        }
        assert_eq!(b.len(), 3);
        assert_eq!(b.get(0).action, 2);
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut b = ReplayBuffer::new(100);
        for a in 0..50 {
            b.push(transition(a));
        }
        let s1: Vec<usize> = b.sample(20, &mut rng_from(7)).iter().map(|t| t.action).collect();
        let s2: Vec<usize> = b.sample(20, &mut rng_from(7)).iter().map(|t| t.action).collect();
        assert_eq!(s1, s2);
        assert!(ReplayBuffer::new(1).sample(4, &mut rng_from(0)).is_empty());
    }
}
