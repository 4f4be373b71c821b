use serde::{Deserialize, Serialize};

use super::layout::Terrain;
use super::rules::Rules;
use super::world::{World, WorldState};
use super::CraftError;

/// Channel assignment of an [`Observation`].
///
/// | index | meaning |
/// |---|---|
/// | 0 | agent location |
/// | 1 ..= E | live entities, one channel per entity kind in rules order |
/// | E+1 | wall |
/// | E+2 | water |
/// | E+3 .. E+3+I | inventory item present (count >= 1), broadcast over the grid |
/// | rest | zero padding up to the configured channel count |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelMap {
    pub entity_kinds: usize,
    pub items: usize,
    pub total: usize,
}

impl ChannelMap {
    pub const AGENT: usize = 0;

    pub fn new(rules: &Rules, configured: Option<usize>) -> Result<Self, CraftError> {
        let needed = 3 + rules.entities().len() + rules.items().len();
        let total = match configured {
            Some(c) if c < needed => return Err(CraftError::TooFewChannels { needed, configured: c }),
            Some(c) => c,
            None => needed,
        };
        Ok(Self { entity_kinds: rules.entities().len(), items: rules.items().len(), total })
    }

    pub fn entity(&self, kind: usize) -> usize {
        1 + kind
    }

    pub fn wall(&self) -> usize {
        1 + self.entity_kinds
    }

    pub fn water(&self) -> usize {
        2 + self.entity_kinds
    }

    pub fn item(&self, item: usize) -> usize {
        3 + self.entity_kinds + item
    }
}

/// Binary `height x width x channels` grid, stored row-major with channels innermost.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Observation {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl Observation {
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[self.index(x, y, c)]
    }

    /// Cells where channel `c` is set.
    pub fn cells_in(&self, c: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height)
            .flat_map(move |y| (0..self.width).map(move |x| (x, y)))
            .filter(move |&(x, y)| self.get(x, y, c) == 1)
    }
}

impl World {
    pub fn channel_map(&self, configured: Option<usize>) -> Result<ChannelMap, CraftError> {
        ChannelMap::new(self.rules(), configured)
    }

    pub fn observe(&self, state: &WorldState, map: &ChannelMap) -> Observation {
        let layout = self.layout();
        let (w, h, ch) = (layout.width, layout.height, map.total);
        let mut obs = Observation { height: h, width: w, channels: ch, data: vec![0; w * h * ch] };
        for y in 0..h {
            for x in 0..w {
                let base = (y * w + x) * ch;
                match layout.terrain[y][x] {
                    Terrain::Wall => obs.data[base + map.wall()] = 1,
                    Terrain::Water => obs.data[base + map.water()] = 1,
                    Terrain::Floor => {}
                }
            }
        }
        for e in 0..self.entity_count() {
            if state.is_alive(e) {
                let c = self.entity_cell(e);
                let i = obs.index(c.x as usize, c.y as usize, map.entity(self.entity_kind(e).0 as usize));
                obs.data[i] = 1;
            }
        }
        let i = obs.index(state.agent.x as usize, state.agent.y as usize, ChannelMap::AGENT);
        obs.data[i] = 1;
        for item in 0..map.items {
            if state.inventory.raw()[item] > 0 {
                let c = map.item(item);
                for cell in 0..w * h {
                    obs.data[cell * ch + c] = 1;
                }
            }
        }
        obs
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::craftworld::{Cell, EntityDef, EntityKind, ItemKind, Layout, Placement, PrimitiveAction, Recipe};

    fn world() -> World {
        let rules = Rules::new(
            vec![EntityDef { name: "tree".into(), station: false, respawn: false }],
            vec!["wood".into()],
            vec![Recipe { entity: EntityKind(0), inputs: vec![], output: ItemKind(0) }],
        )
        .unwrap();
        let mut terrain = vec![vec![Terrain::Floor; 6]; 6];
        terrain[0][5] = Terrain::Wall;
        terrain[5][0] = Terrain::Water;
        let layout = Layout {
            width: 6,
            height: 6,
            seed: 0,
            agent_start: Cell::new(3, 4),
            terrain,
            entities: vec![Placement { kind: "tree".into(), x: 3, y: 3 }],
        };
        World::new(Arc::new(layout), Arc::new(rules)).unwrap()
    }

    #[test]
    fn agent_channel_is_one_hot() {
        let w = world();
        let map = w.channel_map(None).unwrap();
        let obs = w.observe(&w.initial_state(), &map);
        assert_eq!(obs.shape(), (6, 6, 5));
        assert_eq!(obs.cells_in(ChannelMap::AGENT).collect::<Vec<_>>(), vec![(3, 4)]);
        assert_eq!(obs.cells_in(map.wall()).collect::<Vec<_>>(), vec![(5, 0)]);
        assert_eq!(obs.cells_in(map.water()).collect::<Vec<_>>(), vec![(0, 5)]);
        assert!(obs.data.iter().all(|&v| v <= 1));
    }

    #[test]
    fn consumed_entity_disappears_and_inventory_broadcasts() {
        let w = world();
        let map = w.channel_map(None).unwrap();
        let s = w.initial_state();
        let before = w.observe(&s, &map);
        assert_eq!(before.get(3, 3, map.entity(0)), 1);
        let after_state = w.step(&s, PrimitiveAction::Interact);
        let after = w.observe(&after_state, &map);
        assert_eq!(after.get(3, 3, map.entity(0)), 0);
        assert_eq!(after.cells_in(map.item(0)).count(), 36);
    }

    #[test]
    fn deterministic_and_padded() {
        let w = world();
        let map = w.channel_map(Some(19)).unwrap();
        let s = w.initial_state();
        let a = w.observe(&s, &map);
        assert_eq!(a, w.observe(&s, &map));
        assert_eq!(a.channels, 19);
        assert!((5..19).all(|c| a.cells_in(c).count() == 0));
        assert!(matches!(w.channel_map(Some(3)), Err(CraftError::TooFewChannels { needed: 5, configured: 3 })));
    }
}
