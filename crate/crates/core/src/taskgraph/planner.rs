use std::collections::BTreeSet;

use super::{IntentionId, PlanError, TaskGraph, TaskIdx};
use crate::craftworld::{ItemKind, PrimitiveAction, World, WorldState};
use crate::util::{FastMap, FastSet};

/// Upper bound on expanded states per search.
pub const DEFAULT_SEARCH_LIMIT: usize = 2_000_000;

/// The teacher's set of acceptable next intentions.
pub type ValidSet = BTreeSet<IntentionId>;

fn key(state: &WorldState) -> WorldState {
    WorldState { step_count: 0, ..*state }
}

/// Breadth-first search over (agent, inventory, liveness) with unit step cost.
///
/// Successors are expanded in [`PrimitiveAction::ACTING`] order, which fixes the
/// plan returned among equally short ones.
pub fn bfs_plan(
    world: &World,
    start: &WorldState,
    goal: impl Fn(&WorldState) -> bool,
    limit: usize,
) -> Result<Vec<PrimitiveAction>, PlanError> {
    if goal(start) {
        return Ok(Vec::new());
    }
    let start = key(start);
    // (state, parent node, action taken from the parent)
    let mut nodes: Vec<(WorldState, u32, PrimitiveAction)> = vec![(start, u32::MAX, PrimitiveAction::Terminate)];
    let mut seen: FastSet<WorldState> = FastSet::default();
    seen.insert(start);
    let mut head = 0usize;
    while head < nodes.len() {
        let state = nodes[head].0;
        for action in PrimitiveAction::ACTING {
            let next = key(&world.step(&state, action));
            if !seen.insert(next) {
                continue;
            }
            nodes.push((next, head as u32, action));
            if goal(&next) {
                let mut path = Vec::new();
                let mut at = nodes.len() - 1;
                while nodes[at].1 != u32::MAX {
                    path.push(nodes[at].2);
                    at = nodes[at].1 as usize;
                }
                path.reverse();
                return Ok(path);
            }
            if nodes.len() > limit {
                return Err(PlanError::SearchLimit(limit));
            }
        }
        head += 1;
    }
    Err(PlanError::Unreachable)
}

fn item_goal(item: ItemKind, target: u32) -> impl Fn(&WorldState) -> bool {
    move |s: &WorldState| s.inventory.count(item) >= target
}

/// Minimum-length primitive plan that completes `task` relative to `baseline`.
pub fn plan(
    world: &World,
    graph: &TaskGraph,
    state: &WorldState,
    task: TaskIdx,
    baseline: &WorldState,
) -> Result<Vec<PrimitiveAction>, PlanError> {
    let item = graph.produced(task);
    bfs_plan(world, state, item_goal(item, baseline.inventory.count(item) + 1), DEFAULT_SEARCH_LIMIT)
}

/// Acceptable next intentions for `current`, given the state it was pushed in.
pub fn valid_next_intentions(
    world: &World,
    graph: &TaskGraph,
    state: &WorldState,
    current: IntentionId,
    baseline: &WorldState,
) -> Result<ValidSet, PlanError> {
    let task = current.task().ok_or(PlanError::NotATask)?;
    if graph.is_satisfied(baseline, state, task) {
        return Ok([IntentionId::Done].into());
    }
    let actions = plan(world, graph, state, task, baseline)?;
    Ok(valid_from_plan(world, graph, state, task, &actions))
}

fn valid_from_plan(
    world: &World,
    graph: &TaskGraph,
    state: &WorldState,
    task: TaskIdx,
    actions: &[PrimitiveAction],
) -> ValidSet {
    let mut set: ValidSet = [IntentionId::Do].into();
    let mut s = *state;
    for &a in actions {
        let out = world.step_detailed(&s, a);
        s = out.state;
        if let Some(r) = out.fired {
            let done = graph.task_of_recipe(r);
            if graph.is_descendant(done, task) {
                set.extend(graph.chain_between(task, done).into_iter().map(IntentionId::Task));
                break;
            }
        }
    }
    set
}

/// Optimal first action and remaining plan length from a cached state.
type CachedStep = Result<(PrimitiveAction, u32), PlanError>;

/// Memoised planner bound to one world.
///
/// Every state on a computed optimal path is recorded with its optimal first
/// action and remaining length, so later queries from those states are free.
#[derive(Debug, Clone)]
pub struct PlanCache {
    world: World,
    limit: usize,
    entries: FastMap<(WorldState, ItemKind, u32), CachedStep>,
}

impl PlanCache {
    pub fn new(world: World) -> Self {
        Self { world, limit: DEFAULT_SEARCH_LIMIT, entries: FastMap::default() }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// First action of an optimal plan reaching `target` units of `item`,
    /// or `None` if already reached.
    fn first_action(
        &mut self,
        state: &WorldState,
        item: ItemKind,
        target: u32,
    ) -> Result<Option<PrimitiveAction>, PlanError> {
        if state.inventory.count(item) >= target {
            return Ok(None);
        }
        let k = (key(state), item, target);
        if let Some(hit) = self.entries.get(&k) {
            return hit.clone().map(|(a, _)| Some(a));
        }
        match bfs_plan(&self.world, state, item_goal(item, target), self.limit) {
            Ok(path) => {
                let mut s = key(state);
                let n = path.len() as u32;
                for (i, &a) in path.iter().enumerate() {
                    self.entries.insert((s, item, target), Ok((a, n - i as u32)));
                    s = key(&self.world.step(&s, a));
                }
                Ok(path.first().copied())
            }
            Err(e) => {
                self.entries.insert(k, Err(e.clone()));
                Err(e)
            }
        }
    }

    /// Same contract as [`plan`].
    pub fn plan(
        &mut self,
        graph: &TaskGraph,
        state: &WorldState,
        task: TaskIdx,
        baseline: &WorldState,
    ) -> Result<Vec<PrimitiveAction>, PlanError> {
        let item = graph.produced(task);
        let target = baseline.inventory.count(item) + 1;
        let mut s = *state;
        let mut out = Vec::new();
        while let Some(a) = self.first_action(&s, item, target)? {
            out.push(a);
            s = self.world.step(&s, a);
        }
        Ok(out)
    }

    /// Expert action for executing `task`: the next optimal primitive, or
    /// `Terminate` once the task is satisfied.
    pub fn expert_action(
        &mut self,
        graph: &TaskGraph,
        state: &WorldState,
        task: TaskIdx,
        baseline: &WorldState,
    ) -> Result<PrimitiveAction, PlanError> {
        let item = graph.produced(task);
        Ok(self.first_action(state, item, baseline.inventory.count(item) + 1)?.unwrap_or(PrimitiveAction::Terminate))
    }

    /// Same contract as [`valid_next_intentions`].
    pub fn valid_next_intentions(
        &mut self,
        graph: &TaskGraph,
        state: &WorldState,
        current: IntentionId,
        baseline: &WorldState,
    ) -> Result<ValidSet, PlanError> {
        let task = current.task().ok_or(PlanError::NotATask)?;
        if graph.is_satisfied(baseline, state, task) {
            return Ok([IntentionId::Done].into());
        }
        let actions = self.plan(graph, state, task, baseline)?;
        Ok(valid_from_plan(&self.world, graph, state, task, &actions))
    }
}
