use rayon::prelude::*;

use super::HarnessError;
use crate::baselines::Trainee;
use crate::craftworld::WorldState;
use crate::learner::Env;
use crate::taskgraph::{LevelGroup, TaskGraph, TaskIdx};

/// Fraction of evaluation layouts on which `agent` completes `main` without a teacher.
pub fn evaluate(agent: &dyn Trainee, layouts: &[(Env, WorldState)], main: TaskIdx) -> Result<f64, HarnessError> {
    if layouts.is_empty() {
        return Err(HarnessError::EmptyEvaluation);
    }
    let wins = layouts.par_iter().filter(|(env, start)| agent.evaluate(env, main, *start)).count();
    Ok(wins as f64 / layouts.len() as f64)
}

/// Distribution of uttered intentions over the four level groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Histogram {
    /// Indexed by [`LevelGroup::index`]; sums to one unless empty.
    pub fractions: [f64; 4],
    pub total: usize,
}

impl Histogram {
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn fraction(&self, group: LevelGroup) -> f64 {
        self.fractions[group.index()]
    }
}

pub fn abstraction_histogram(uttered: &[TaskIdx], graph: &TaskGraph) -> Histogram {
    let mut counts = [0usize; 4];
    for &t in uttered {
        counts[graph.level_group(t).index()] += 1;
    }
    let total = uttered.len();
    let fractions = if total == 0 { [0.0; 4] } else { counts.map(|c| c as f64 / total as f64) };
    Histogram { fractions, total }
}
