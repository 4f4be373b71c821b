use std::sync::Arc;

use super::features::{Features, Featurizer, StateView};
use super::qfunction::BackendKind;
use crate::craftworld::{CraftError, World, WorldState};
use crate::taskgraph::{IntentionId, LevelTable, PlanCache, PlanError, TaskGraph, ValidSet};

/// One training or evaluation environment: a world, its task graph, the
/// planner behind the teacher and the observation encoder.
#[derive(Debug, Clone)]
pub struct Env {
    graph: Arc<TaskGraph>,
    levels: Arc<LevelTable>,
    planner: PlanCache,
    featurizer: Featurizer,
}

impl Env {
    pub fn new(
        graph: Arc<TaskGraph>,
        levels: Arc<LevelTable>,
        world: World,
        channels: Option<usize>,
        backend: BackendKind,
    ) -> Result<Self, CraftError> {
        let featurizer = Featurizer::new(&world, channels, backend == BackendKind::Linear)?;
        Ok(Self { graph, levels, planner: PlanCache::new(world), featurizer })
    }

    pub fn graph(&self) -> &Arc<TaskGraph> {
        &self.graph
    }

    pub fn levels(&self) -> &Arc<LevelTable> {
        &self.levels
    }

    pub fn world(&self) -> &World {
        self.planner.world()
    }

    pub fn planner(&mut self) -> &mut PlanCache {
        &mut self.planner
    }

    pub fn featurizer(&self) -> &Featurizer {
        &self.featurizer
    }

    pub fn view(&self, state: &WorldState) -> Arc<StateView> {
        self.featurizer.view(self.planner.world(), state)
    }

    /// View of `state` during an execution that began with features `start`.
    pub fn execution_view(&self, state: &WorldState, start: &Features) -> Arc<StateView> {
        self.view(state).during_execution(start)
    }

    /// The teacher's valid set; an intention that can no longer be completed
    /// must be relinquished, so its set is `{Done}`.
    pub fn valid_set(&mut self, state: &WorldState, current: IntentionId, baseline: &WorldState) -> ValidSet {
        match self.planner.valid_next_intentions(&self.graph, state, current, baseline) {
            Ok(v) => v,
            Err(PlanError::Unreachable | PlanError::SearchLimit(_)) => [IntentionId::Done].into(),
            Err(PlanError::NotATask) => ValidSet::new(),
        }
    }
}
