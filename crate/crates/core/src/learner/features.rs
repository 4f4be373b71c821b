use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::craftworld::{ChannelMap, CraftError, Observation, World, WorldState};
use crate::util::{combine, hash_bytes};

/// How observations are turned into value-function inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Held items plus the direction to the nearest instance of each entity kind.
    Relational,
    /// The full observation, hashed.
    Exact,
}

/// Position of the nearest live entity of one kind relative to the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Absent,
    /// Within interaction range.
    Here,
    /// Sign of the offset along x and y, each in {-1, 0, 1}.
    Toward(i8, i8),
}

impl Relation {
    pub fn code(self) -> u64 {
        match self {
            Relation::Absent => 0,
            Relation::Here => 1,
            Relation::Toward(dx, dy) => 2 + ((dx + 1) * 3 + (dy + 1)) as u64,
        }
    }
}

/// Value-function inputs derived from one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub exact: u64,
    /// Order-free hash of the names of held items.
    pub inventory: u64,
    /// Sorted name hashes of held items.
    pub held: Vec<u64>,
    /// Items gained or lost since the current execution began; [`NO_PROGRESS`] outside executions.
    pub progress: u64,
    /// `(entity-kind name hash, relation)` for every kind in the channel map.
    pub relations: Vec<(u64, Relation)>,
    /// Flattened observation plus a trailing bias, for the linear backend.
    pub dense: Vec<f32>,
}

/// One observed state with its features, shared between consecutive transitions.
#[derive(Debug, Clone)]
pub struct StateView {
    pub state: WorldState,
    pub obs: Observation,
    pub features: Features,
}

/// Observation encoder bound to one world's channel map.
#[derive(Debug, Clone)]
pub struct Featurizer {
    channels: ChannelMap,
    kind_hash: Vec<u64>,
    item_hash: Vec<u64>,
    dense: bool,
}

pub fn name_hash(name: &str) -> u64 {
    hash_bytes(name.as_bytes())
}

/// Progress of a state whose held items equal those at the start of the execution.
pub const NO_PROGRESS: u64 = 0x5be0_cd19_137e_2179;

/// Hash of the items gained and lost between two sorted held-item lists.
pub fn progress_hash(start: &[u64], now: &[u64]) -> u64 {
    let gained = now.iter().filter(|h| start.binary_search(h).is_err());
    let lost = start.iter().filter(|h| now.binary_search(h).is_err());
    let mut acc = NO_PROGRESS;
    for &h in gained {
        acc = combine(acc, h);
    }
    for &h in lost {
        acc = combine(acc, !h);
    }
    acc
}

impl StateView {
    /// This view as seen during an execution that began in `start`.
    pub fn during_execution(self: &Arc<Self>, start: &Features) -> Arc<Self> {
        let progress = progress_hash(&start.held, &self.features.held);
        if progress == self.features.progress {
            return self.clone();
        }
        let mut v = (**self).clone();
        v.features.progress = progress;
        Arc::new(v)
    }
}

impl Featurizer {
    pub fn new(world: &World, configured_channels: Option<usize>, dense: bool) -> Result<Self, CraftError> {
        let channels = world.channel_map(configured_channels)?;
        let rules = world.rules();
        Ok(Self {
            channels,
            kind_hash: rules.entities().iter().map(|e| name_hash(&e.name)).collect(),
            item_hash: rules.items().iter().map(|i| name_hash(i)).collect(),
            dense,
        })
    }

    pub fn channels(&self) -> &ChannelMap {
        &self.channels
    }

    /// Length of the dense vector (observation size plus bias).
    pub fn dense_len(&self, world: &World) -> usize {
        world.layout().width * world.layout().height * self.channels.total + 1
    }

    pub fn view(&self, world: &World, state: &WorldState) -> Arc<StateView> {
        let obs = world.observe(state, &self.channels);
        let features = self.features(&obs);
        Arc::new(StateView { state: *state, obs, features })
    }

    pub fn features(&self, obs: &Observation) -> Features {
        let exact = hash_bytes(&obs.data);
        let agent = obs.cells_in(ChannelMap::AGENT).next().unwrap_or((0, 0));
        let mut held: Vec<u64> = Vec::new();
        if obs.width > 0 && obs.height > 0 {
            for (i, &h) in self.item_hash.iter().enumerate() {
                if obs.get(0, 0, self.channels.item(i)) != 0 {
                    held.push(h);
                }
            }
        }
        held.sort_unstable();
        let inventory = held.iter().fold(0x1f2e_3d4c_5b6a_7988, |acc, &h| combine(acc, h));
        let relations = self
            .kind_hash
            .iter()
            .enumerate()
            .map(|(k, &h)| {
                let mut best: Option<(i64, i64, i64)> = None;
                for (x, y) in obs.cells_in(self.channels.entity(k)) {
                    let dx = x as i64 - agent.0 as i64;
                    let dy = y as i64 - agent.1 as i64;
                    let d = dx.abs() + dy.abs();
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, dx, dy));
                    }
                }
                let rel = match best {
                    None => Relation::Absent,
                    Some((d, _, _)) if d <= 1 => Relation::Here,
                    Some((_, dx, dy)) => Relation::Toward(dx.signum() as i8, dy.signum() as i8),
                };
                (h, rel)
            })
            .collect();
        let dense = if self.dense {
            let mut v: Vec<f32> = obs.data.iter().map(|&b| b as f32).collect();
            v.push(1.0);
            v
        } else {
            Vec::new()
        };
        Features { exact, inventory, held, progress: NO_PROGRESS, relations, dense }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::craftworld::{Cell, Layout, Placement, PrimitiveAction, Terrain};
    use crate::data;
    use crate::taskgraph::load_graph;

    fn world() -> World {
        let g = load_graph(data::BAKE_PORK_GRAPH).unwrap();
        let layout = Layout {
            width: 5,
            height: 5,
            seed: 0,
            agent_start: Cell::new(2, 2),
            terrain: vec![vec![Terrain::Floor; 5]; 5],
            entities: vec![
                Placement { kind: "tree".into(), x: 2, y: 1 },
                Placement { kind: "stone".into(), x: 0, y: 4 },
                Placement { kind: "stone".into(), x: 4, y: 0 },
            ],
        };
        World::new(Arc::new(layout), g.rules().clone()).unwrap()
    }

    fn relation(f: &Features, name: &str) -> Relation {
        f.relations.iter().find(|(h, _)| *h == name_hash(name)).unwrap().1
    }

    #[test]
    fn relations_point_to_the_nearest_instance() {
        let w = world();
        let fz = Featurizer::new(&w, None, false).unwrap();
        let s = w.initial_state();
        let f = fz.view(&w, &s).features.clone();
        assert_eq!(relation(&f, "tree"), Relation::Here);
        assert_eq!(relation(&f, "pig"), Relation::Absent);
        // Both stones are four steps away; the first in scan order (top row) wins.
        assert_eq!(relation(&f, "stone"), Relation::Toward(1, -1));
        assert!(f.dense.is_empty());
    }

    #[test]
    fn inventory_hash_tracks_held_items_only() {
        let w = world();
        let fz = Featurizer::new(&w, None, true).unwrap();
        let s0 = w.initial_state();
        let s1 = w.step(&s0, PrimitiveAction::MoveLeft);
        let s2 = w.step(&s0, PrimitiveAction::Interact);
        let (f0, f1, f2) =
            (fz.view(&w, &s0).features.clone(), fz.view(&w, &s1).features.clone(), fz.view(&w, &s2).features.clone());
        assert_eq!(f0.inventory, f1.inventory);
        assert_ne!(f0.inventory, f2.inventory);
        assert_ne!(f0.exact, f1.exact);
        assert_eq!(f0.dense.len(), fz.dense_len(&w));
        assert_eq!(*f0.dense.last().unwrap(), 1.0);
        assert_eq!(relation(&f2, "tree"), Relation::Absent);
        assert_eq!(f2.progress, NO_PROGRESS);
    }

    #[test]
    fn progress_records_gains_and_losses() {
        let (a, b, c) = (name_hash("wood"), name_hash("stone"), name_hash("pickaxe"));
        let mut ab = vec![a, b];
        ab.sort_unstable();
        assert_eq!(progress_hash(&ab, &ab), NO_PROGRESS);
        assert_ne!(progress_hash(&[], &[a]), progress_hash(&[a], &[]));
        assert_ne!(progress_hash(&[], &[a]), progress_hash(&[], &[b]));
        assert_eq!(progress_hash(&[c], &ab), progress_hash(&[c], &ab));
        let w = world();
        let fz = Featurizer::new(&w, None, false).unwrap();
        let s0 = w.initial_state();
        let start = fz.view(&w, &s0);
        let got = fz.view(&w, &w.step(&s0, PrimitiveAction::Interact)).during_execution(&start.features);
        assert_eq!(got.features.progress, progress_hash(&[], &[name_hash("wood")]));
        assert!(Arc::ptr_eq(&start.during_execution(&start.features), &start));
    }
}
