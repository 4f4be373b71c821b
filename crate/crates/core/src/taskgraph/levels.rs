use std::fmt;

use serde::{Deserialize, Serialize};

use super::planner::plan;
use super::{GraphError, TaskGraph, TaskIdx};
use crate::craftworld::World;

/// Coarse abstraction group by distance to the nearest root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LevelGroup {
    I,
    II,
    III,
    IV,
}

impl LevelGroup {
    pub const ALL: [LevelGroup; 4] = [LevelGroup::I, LevelGroup::II, LevelGroup::III, LevelGroup::IV];

    pub fn from_root_distance(d: u32) -> Self {
        match d {
            0 => LevelGroup::IV,
            1 => LevelGroup::III,
            2 => LevelGroup::II,
            _ => LevelGroup::I,
        }
    }

    /// 0 for the least abstract group, 3 for roots.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            LevelGroup::I => "I",
            LevelGroup::II => "II",
            LevelGroup::III => "III",
            LevelGroup::IV => "IV",
        }
    }
}

impl fmt::Display for LevelGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl TaskGraph {
    pub fn level_group(&self, idx: TaskIdx) -> LevelGroup {
        LevelGroup::from_root_distance(self.root_distance(idx))
    }
}

/// Per-task abstraction level: optimal plan length from the fresh state of a
/// reference world.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelTable {
    levels: Vec<u32>,
}

impl LevelTable {
    pub fn compute(graph: &TaskGraph, reference: &World) -> Result<Self, GraphError> {
        let s = reference.initial_state();
        let levels = graph
            .task_indices()
            .map(|t| {
                plan(reference, graph, &s, t, &s)
                    .map(|p| p.len() as u32)
                    .map_err(|e| GraphError::Unreachable { task: graph.id(t).to_string(), reason: e.to_string() })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { levels })
    }

    pub fn from_levels(levels: Vec<u32>) -> Self {
        Self { levels }
    }

    pub fn level(&self, idx: TaskIdx) -> u32 {
        self.levels[idx.0]
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeSet, HashMap, VecDeque};
    use std::sync::Arc;

    use super::*;
    use crate::craftworld::{generate_layout, Cell, Layout, Placement, PrimitiveAction, Terrain};
    use crate::data;
    use crate::taskgraph::load_graph;

    #[test]
    fn groups_follow_root_distance() {
        assert_eq!(LevelGroup::from_root_distance(0), LevelGroup::IV);
        assert_eq!(LevelGroup::from_root_distance(1), LevelGroup::III);
        assert_eq!(LevelGroup::from_root_distance(2), LevelGroup::II);
        assert_eq!(LevelGroup::from_root_distance(4), LevelGroup::I);
    }

    #[test]
    fn default_graph_spans_four_groups() {
        for src in [data::BAKE_PORK_GRAPH, data::FULL_GRAPH] {
            let g = load_graph(src).unwrap();
            let groups: BTreeSet<LevelGroup> = g.task_indices().map(|t| g.level_group(t)).collect();
            assert_eq!(groups.len(), 4);
        }
    }

    #[test]
    fn levels_strictly_decrease_along_edges() {
        for (src, seed) in [(data::BAKE_PORK_GRAPH, 7), (data::FULL_GRAPH, 3)] {
            let g = load_graph(src).unwrap();
            let layout = generate_layout(seed, &g.generation_params(8, 8)).unwrap();
            let w = World::new(Arc::new(layout), g.rules().clone()).unwrap();
            let table = LevelTable::compute(&g, &w).unwrap();
            for t in g.task_indices() {
                for &c in &g.task(t).children {
                    assert!(table.level(t) > table.level(c), "{} vs {}", g.id(t), g.id(c));
                }
            }
        }
    }

    fn oracle(w: &World, item: crate::craftworld::ItemKind) -> usize {
        let s0 = w.initial_state();
        let mut dist = HashMap::new();
        let mut q = VecDeque::from([s0]);
        dist.insert((s0.agent, *s0.inventory.raw(), s0.alive), 0usize);
        let mut best = usize::MAX;
        while let Some(s) = q.pop_front() {
            let d = dist[&(s.agent, *s.inventory.raw(), s.alive)];
            if s.inventory.count(item) > 0 {
                best = best.min(d);
            }
            for a in PrimitiveAction::ALL {
                let n = w.step(&s, a);
                dist.entry((n.agent, *n.inventory.raw(), n.alive)).or_insert_with(|| {
                    q.push_back(n);
                    d + 1
                });
            }
        }
        best
    }

    #[test]
    fn parent_of_two_leaves_needs_both_subplans() {
        let src = r#"
            [[entity]]
            name = "tree"
            [[entity]]
            name = "rock"
            [[entity]]
            name = "bench"
            station = true
            [[task]]
            id = "GetWood"
            entity = "tree"
            produces = "wood"
            parents = ["Build"]
            [[task]]
            id = "GetRock"
            entity = "rock"
            produces = "rock"
            parents = ["Build"]
            [[task]]
            id = "Build"
            entity = "bench"
            requires = ["wood", "rock"]
            produces = "hut"
        "#;
        let g = load_graph(src).unwrap();
        let layout = Layout {
            width: 9,
            height: 1,
            seed: 0,
            agent_start: Cell::new(4, 0),
            terrain: vec![vec![Terrain::Floor; 9]],
            entities: vec![
                Placement { kind: "tree".into(), x: 0, y: 0 },
                Placement { kind: "rock".into(), x: 8, y: 0 },
                Placement { kind: "bench".into(), x: 4, y: 0 },
            ],
        };
        let w = World::new(Arc::new(layout), g.rules().clone()).unwrap();
        let t = LevelTable::compute(&g, &w).unwrap();
        let wood = g.index_of("GetWood").unwrap();
        let rock = g.index_of("GetRock").unwrap();
        let build = g.index_of("Build").unwrap();
        assert_eq!(t.level(wood), 4);
        assert_eq!(t.level(rock), 4);
        assert_eq!(t.level(build) as usize, oracle(&w, g.produced(build)));
        assert!(t.level(build) >= 10);
    }

    #[test]
    fn unreachable_task_is_reported() {
        let g = load_graph(data::BAKE_PORK_GRAPH).unwrap();
        let layout = Layout {
            width: 2,
            height: 1,
            seed: 0,
            agent_start: Cell::new(0, 0),
            terrain: vec![vec![Terrain::Floor; 2]],
            entities: vec![Placement { kind: "tree".into(), x: 1, y: 0 }],
        };
        let w = World::new(Arc::new(layout), g.rules().clone()).unwrap();
        assert!(matches!(LevelTable::compute(&g, &w), Err(GraphError::Unreachable { .. })));
    }
}
