use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::GraphError;
use crate::craftworld::{EntityDef, EntityKind, GenerationParams, ItemKind, Recipe, Rules, World, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaskIdx(pub usize);

/// A verbal or executive intention symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntentionId {
    Task(TaskIdx),
    Do,
    Done,
}

impl IntentionId {
    pub const DO_SYMBOL: &'static str = "DO";
    pub const DONE_SYMBOL: &'static str = "DONE";

    pub fn task(self) -> Option<TaskIdx> {
        match self {
            IntentionId::Task(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub id: String,
    pub name: String,
    pub required_items: Vec<String>,
    /// Entity interacted with to complete the task: a resource (consumed unless
    /// it respawns) or a station.
    pub entity: String,
    pub produced_item: String,
    pub parents: Vec<TaskIdx>,
    pub children: Vec<TaskIdx>,
    pub leaf: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    #[serde(default)]
    entity: Vec<EntityDef>,
    task: Vec<TaskEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskEntry {
    id: String,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    requires: Vec<String>,
    entity: String,
    produces: String,
    #[serde(default)]
    parents: Vec<String>,
}

/// Validated task hierarchy plus the crafting rules it induces (one recipe per
/// task, in file order).
#[derive(Debug, Clone)]
pub struct TaskGraph {
    tasks: Vec<Task>,
    index: HashMap<String, TaskIdx>,
    roots: Vec<TaskIdx>,
    root_distance: Vec<u32>,
    produced: Vec<ItemKind>,
    rules: Arc<Rules>,
}

/// Parses and validates a task graph file.
pub fn load_graph(source: &str) -> Result<TaskGraph, GraphError> {
    let file: GraphFile = toml::from_str(source).map_err(|e| GraphError::Parse(e.to_string()))?;
    TaskGraph::from_file(file)
}

impl TaskGraph {
    fn from_file(file: GraphFile) -> Result<Self, GraphError> {
        let mut entity_names = BTreeSet::new();
        for e in &file.entity {
            if !entity_names.insert(e.name.clone()) {
                return Err(GraphError::Duplicate { what: "entity", name: e.name.clone() });
            }
        }
        let mut index = HashMap::new();
        for (i, t) in file.task.iter().enumerate() {
            if t.id == IntentionId::DO_SYMBOL || t.id == IntentionId::DONE_SYMBOL {
                return Err(GraphError::Reserved(t.id.clone()));
            }
            if index.insert(t.id.clone(), TaskIdx(i)).is_some() {
                return Err(GraphError::Duplicate { what: "task id", name: t.id.clone() });
            }
        }
        let mut producers: HashMap<&str, &str> = HashMap::new();
        for t in &file.task {
            if let Some(other) = producers.insert(&t.produces, &t.id) {
                return Err(GraphError::Duplicate {
                    what: "produced item",
                    name: format!("{} (tasks `{}` and `{}`)", t.produces, other, t.id),
                });
            }
            if !entity_names.contains(&t.entity) {
                return Err(GraphError::Unknown { task: t.id.clone(), what: "entity", name: t.entity.clone() });
            }
        }
        let n = file.task.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (i, t) in file.task.iter().enumerate() {
            for p in &t.parents {
                let &pi = index.get(p).ok_or_else(|| GraphError::Unknown {
                    task: t.id.clone(),
                    what: "parent",
                    name: p.clone(),
                })?;
                if !parents[i].contains(&pi) {
                    parents[i].push(pi);
                    children[pi.0].push(TaskIdx(i));
                }
            }
        }
        check_acyclic(&file.task, &children)?;
        for (i, t) in file.task.iter().enumerate() {
            let required: BTreeSet<&str> = t.requires.iter().map(String::as_str).collect();
            let produced: BTreeSet<&str> = children[i].iter().map(|c| file.task[c.0].produces.as_str()).collect();
            if required != produced || required.len() != t.requires.len() {
                return Err(GraphError::RecipeMismatch {
                    task: t.id.clone(),
                    required: t.requires.clone(),
                    produced: produced.into_iter().map(String::from).collect(),
                });
            }
        }

        let items: Vec<String> = file.task.iter().map(|t| t.produces.clone()).collect();
        let entity_kind: HashMap<&str, EntityKind> =
            file.entity.iter().enumerate().map(|(i, e)| (e.name.as_str(), EntityKind(i as u16))).collect();
        let item_kind: HashMap<&str, ItemKind> =
            items.iter().enumerate().map(|(i, s)| (s.as_str(), ItemKind(i as u16))).collect();
        let recipes = file
            .task
            .iter()
            .map(|t| Recipe {
                entity: entity_kind[t.entity.as_str()],
                inputs: t.requires.iter().map(|r| item_kind[r.as_str()]).collect(),
                output: item_kind[t.produces.as_str()],
            })
            .collect();
        let rules = Rules::new(file.entity.clone(), items, recipes)?;
        let produced = (0..n).map(|i| ItemKind(i as u16)).collect();

        let tasks: Vec<Task> = file
            .task
            .into_iter()
            .enumerate()
            .map(|(i, t)| Task {
                name: t.name.unwrap_or_else(|| t.id.clone()),
                id: t.id,
                required_items: t.requires,
                entity: t.entity,
                produced_item: t.produces,
                parents: parents[i].clone(),
                leaf: children[i].is_empty(),
                children: children[i].clone(),
            })
            .collect();
        let roots: Vec<TaskIdx> = (0..n).filter(|&i| tasks[i].parents.is_empty()).map(TaskIdx).collect();

        // Distance to the nearest root, walking child links downward.
        let mut root_distance = vec![u32::MAX; n];
        let mut queue: VecDeque<TaskIdx> = roots.iter().copied().collect();
        for r in &roots {
            root_distance[r.0] = 0;
        }
        while let Some(t) = queue.pop_front() {
            for &c in &tasks[t.0].children {
                if root_distance[c.0] == u32::MAX {
                    root_distance[c.0] = root_distance[t.0] + 1;
                    queue.push_back(c);
                }
            }
        }

        Ok(Self { tasks, index, roots, root_distance, produced, rules: Arc::new(rules) })
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, idx: TaskIdx) -> &Task {
        &self.tasks[idx.0]
    }

    pub fn task_indices(&self) -> impl Iterator<Item = TaskIdx> {
        (0..self.tasks.len()).map(TaskIdx)
    }

    pub fn index_of(&self, id: &str) -> Result<TaskIdx, GraphError> {
        self.index.get(id).copied().ok_or_else(|| GraphError::UnknownTask(id.to_string()))
    }

    pub fn id(&self, idx: TaskIdx) -> &str {
        &self.tasks[idx.0].id
    }

    pub fn roots(&self) -> &[TaskIdx] {
        &self.roots
    }

    pub fn is_root(&self, idx: TaskIdx) -> bool {
        self.tasks[idx.0].parents.is_empty()
    }

    pub fn rules(&self) -> &Arc<Rules> {
        &self.rules
    }

    /// Item whose count must increase for the task to count as done.
    pub fn produced(&self, idx: TaskIdx) -> ItemKind {
        self.produced[idx.0]
    }

    /// The recipe index of a task equals its task index.
    pub fn task_of_recipe(&self, recipe: usize) -> TaskIdx {
        TaskIdx(recipe)
    }

    pub fn root_distance(&self, idx: TaskIdx) -> u32 {
        self.root_distance[idx.0]
    }

    pub fn max_depth(&self) -> u32 {
        self.root_distance.iter().copied().max().unwrap_or(0)
    }

    /// Whether `desc` is a strict descendant of `anc`.
    pub fn is_descendant(&self, desc: TaskIdx, anc: TaskIdx) -> bool {
        let mut stack = self.tasks[anc.0].children.clone();
        let mut seen = vec![false; self.tasks.len()];
        while let Some(t) = stack.pop() {
            if t == desc {
                return true;
            }
            if !std::mem::replace(&mut seen[t.0], true) {
                stack.extend_from_slice(&self.tasks[t.0].children);
            }
        }
        false
    }

    /// Tasks lying on some child path from `top` (exclusive) down to `bottom` (inclusive).
    pub fn chain_between(&self, top: TaskIdx, bottom: TaskIdx) -> Vec<TaskIdx> {
        self.task_indices()
            .filter(|&t| (t == bottom || self.is_descendant(bottom, t)) && self.is_descendant(t, top))
            .collect()
    }

    /// Effect-based completion predicate.
    pub fn is_satisfied(&self, before: &WorldState, after: &WorldState, idx: TaskIdx) -> bool {
        World::produced_between(before, after, self.produced(idx))
    }

    /// Same as [`Self::is_satisfied`] but addressed by id.
    pub fn is_task_satisfied(&self, before: &WorldState, after: &WorldState, id: &str) -> Result<bool, GraphError> {
        Ok(self.is_satisfied(before, after, self.index_of(id)?))
    }

    /// Entity instances needed so that every root can be completed from scratch:
    /// the per-kind maximum over roots of the expanded recipe tree.
    pub fn required_entities(&self) -> BTreeMap<String, u32> {
        let mut out: BTreeMap<String, u32> = BTreeMap::new();
        for &root in &self.roots {
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            self.expand(root, &mut counts);
            for (k, v) in counts {
                let e = out.entry(k).or_insert(0);
                *e = (*e).max(v);
            }
        }
        for e in self.rules.entities() {
            if !e.is_consumed_on_use() {
                if let Some(c) = out.get_mut(&e.name) {
                    *c = 1;
                }
            }
        }
        out
    }

    fn expand(&self, t: TaskIdx, counts: &mut BTreeMap<String, u32>) {
        *counts.entry(self.tasks[t.0].entity.clone()).or_insert(0) += 1;
        for &c in &self.tasks[t.0].children {
            self.expand(c, counts);
        }
    }

    /// Generator parameters that place every entity the graph needs.
    pub fn generation_params(&self, width: usize, height: usize) -> GenerationParams {
        let mut p =
            GenerationParams::new(width, height, self.rules.entities().iter().map(|e| e.name.clone()).collect());
        p.required = self.required_entities();
        p
    }

    /// Every id of `other` present here (for intention-set expansion checks).
    pub fn contains_all_ids<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> bool {
        ids.into_iter().all(|id| self.index.contains_key(id))
    }
}

fn check_acyclic(tasks: &[TaskEntry], children: &[Vec<TaskIdx>]) -> Result<(), GraphError> {
    let n = tasks.len();
    let mut indegree = vec![0usize; n];
    for cs in children {
        for c in cs {
            indegree[c.0] += 1;
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut visited = 0;
    while let Some(i) = queue.pop_front() {
        visited += 1;
        for c in &children[i] {
            indegree[c.0] -= 1;
            if indegree[c.0] == 0 {
                queue.push_back(c.0);
            }
        }
    }
    if visited == n {
        Ok(())
    } else {
        let stuck = (0..n).find(|&i| indegree[i] > 0).expect("some node left");
        Err(GraphError::Cycle(tasks[stuck].id.clone()))
    }
}

impl fmt::Display for TaskGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tasks.iter().enumerate() {
            let parents: Vec<&str> = t.parents.iter().map(|p| self.tasks[p.0].id.as_str()).collect();
            writeln!(
                f,
                "{:<18} depth {} {:<5} {} + {:?} -> {}  parents {:?}",
                t.id,
                self.root_distance[i],
                if t.leaf { "leaf" } else { "" },
                t.entity,
                t.required_items,
                t.produced_item,
                parents
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;

    const TWO: &str = r#"
        [[entity]]
        name = "tree"
        [[entity]]
        name = "bench"
        station = true
        [[task]]
        id = "GetWood"
        entity = "tree"
        produces = "wood"
        parents = ["MakePlank"]
        [[task]]
        id = "MakePlank"
        entity = "bench"
        requires = ["wood"]
        produces = "plank"
    "#;

    #[test]
    fn minimal_graph_loads() {
        let g = load_graph(TWO).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.roots(), &[g.index_of("MakePlank").unwrap()]);
        let wood = g.index_of("GetWood").unwrap();
        assert!(g.task(wood).leaf);
        assert!(!g.task(g.index_of("MakePlank").unwrap()).leaf);
        assert_eq!(g.root_distance(wood), 1);
    }

    #[test]
    fn cycle_is_rejected() {
        let src = r#"
            [[entity]]
            name = "x"
            [[task]]
            id = "A"
            entity = "x"
            requires = ["b"]
            produces = "a"
            parents = ["B"]
            [[task]]
            id = "B"
            entity = "x"
            requires = ["a"]
            produces = "b"
            parents = ["A"]
        "#;
        assert!(matches!(load_graph(src), Err(GraphError::Cycle(_))));
    }

    #[test]
    fn recipe_child_mismatch_is_rejected() {
        let src = TWO.replace("requires = [\"wood\"]", "requires = [\"stone\"]");
        assert!(matches!(load_graph(&src), Err(GraphError::RecipeMismatch { .. })));
        let leaf_with_inputs = TWO.replace("produces = \"wood\"", "produces = \"wood\"\n requires = [\"plank\"]");
        assert!(load_graph(&leaf_with_inputs).is_err());
    }

    #[test]
    fn unknown_fields_and_reserved_ids_are_rejected() {
        assert!(matches!(
            load_graph(&TWO.replace("id = \"GetWood\"", "id = \"GetWood\"\ncolor = 3")),
            Err(GraphError::Parse(_))
        ));
        assert!(matches!(load_graph(&TWO.replace("\"GetWood\"", "\"DONE\"")), Err(GraphError::Reserved(_))));
        assert!(matches!(load_graph("not toml ["), Err(GraphError::Parse(_))));
        assert!(matches!(
            load_graph(&TWO.replace("parents = [\"MakePlank\"]", "parents = [\"Nope\"]")),
            Err(GraphError::Unknown { .. })
        ));
    }

    #[test]
    fn default_graph_has_the_bake_pork_hierarchy() {
        let g = load_graph(data::BAKE_PORK_GRAPH).unwrap();
        let root = g.index_of("BakePork").unwrap();
        assert!(g.roots().contains(&root));
        for id in ["GetCoal", "MakeStonePickaxe", "GetStone"] {
            assert!(g.is_descendant(g.index_of(id).unwrap(), root), "{id}");
        }
        assert_eq!(g.max_depth(), 3);
    }

    #[test]
    fn full_graph_extends_the_default_one() {
        let small = load_graph(data::BAKE_PORK_GRAPH).unwrap();
        let full = load_graph(data::FULL_GRAPH).unwrap();
        assert!(full.contains_all_ids(small.tasks().iter().map(|t| t.id.as_str())));
        for id in ["BakeBeef", "SmeltSilver", "MakeArrow", "BakePork"] {
            assert!(full.is_root(full.index_of(id).unwrap()), "{id}");
        }
        // Shared subtasks with BakePork.
        let coal = full.index_of("GetCoal").unwrap();
        assert!(full.is_descendant(coal, full.index_of("BakeBeef").unwrap()));
        assert!(full.is_descendant(coal, full.index_of("SmeltSilver").unwrap()));
    }

    #[test]
    fn required_entities_cover_every_root() {
        let full = load_graph(data::FULL_GRAPH).unwrap();
        let req = full.required_entities();
        assert_eq!(req["tree"], 2);
        assert_eq!(req["stone"], 2);
        assert_eq!(req["furnace"], 1);
        assert_eq!(req["workbench"], 1);
    }

    #[test]
    fn chain_between_follows_child_links() {
        let g = load_graph(data::BAKE_PORK_GRAPH).unwrap();
        let root = g.index_of("BakePork").unwrap();
        let stone = g.index_of("GetStone").unwrap();
        let mut chain: Vec<&str> = g.chain_between(root, stone).into_iter().map(|t| g.id(t)).collect();
        chain.sort();
        assert_eq!(chain, vec!["GetCoal", "GetStone", "MakeStonePickaxe"]);
    }
}
