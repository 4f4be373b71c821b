use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::layout::{Cell, Layout, Terrain};
use super::rules::{EntityKind, ItemKind, RecipeIdx, Rules};
use super::CraftError;

pub const MAX_ITEMS: usize = 32;
pub const MAX_ENTITIES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrimitiveAction {
    MoveUp,
    MoveDown,
    MoveLeft,
    MoveRight,
    Interact,
    Terminate,
}

impl PrimitiveAction {
    pub const ALL: [PrimitiveAction; 6] = [
        PrimitiveAction::MoveUp,
        PrimitiveAction::MoveDown,
        PrimitiveAction::MoveLeft,
        PrimitiveAction::MoveRight,
        PrimitiveAction::Interact,
        PrimitiveAction::Terminate,
    ];
    /// Actions that act on the world (everything but `Terminate`).
    pub const ACTING: [PrimitiveAction; 5] = [
        PrimitiveAction::MoveUp,
        PrimitiveAction::MoveDown,
        PrimitiveAction::MoveLeft,
        PrimitiveAction::MoveRight,
        PrimitiveAction::Interact,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    fn delta(self) -> Option<(i32, i32)> {
        match self {
            PrimitiveAction::MoveUp => Some((0, -1)),
            PrimitiveAction::MoveDown => Some((0, 1)),
            PrimitiveAction::MoveLeft => Some((-1, 0)),
            PrimitiveAction::MoveRight => Some((1, 0)),
            _ => None,
        }
    }
}

impl fmt::Display for PrimitiveAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Item counts indexed by [`ItemKind`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Inventory([u8; MAX_ITEMS]);

impl Default for Inventory {
    fn default() -> Self {
        Self([0; MAX_ITEMS])
    }
}

impl Inventory {
    pub fn count(&self, item: ItemKind) -> u32 {
        u32::from(self.0[item.0 as usize])
    }

    pub fn add(&mut self, item: ItemKind) {
        let c = &mut self.0[item.0 as usize];
        *c = c.saturating_add(1);
    }

    /// Removes one of each item; returns false (leaving the inventory unchanged) if any is missing.
    pub fn take_all(&mut self, items: &[ItemKind]) -> bool {
        if !self.contains_all(items) {
            return false;
        }
        for it in items {
            self.0[it.0 as usize] -= 1;
        }
        true
    }

    pub fn contains_all(&self, items: &[ItemKind]) -> bool {
        // Inputs are a set: each distinct kind appears once.
        items.iter().all(|it| self.0[it.0 as usize] >= 1)
    }

    /// Bitmask of items with count >= 1.
    pub fn presence_bits(&self) -> u32 {
        self.0.iter().enumerate().fold(0u32, |acc, (i, &c)| if c > 0 { acc | (1 << i) } else { acc })
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn raw(&self) -> &[u8; MAX_ITEMS] {
        &self.0
    }
}

impl fmt::Debug for Inventory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.0.iter().enumerate().filter(|(_, &c)| c > 0)).finish()
    }
}

/// Mutable simulation state. Entity positions are static and live in [`World`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    pub agent: Cell,
    pub inventory: Inventory,
    /// Bit `e` set iff entity instance `e` is still present.
    pub alive: u64,
    pub step_count: u64,
}

impl WorldState {
    pub fn is_alive(&self, entity: usize) -> bool {
        self.alive & (1u64 << entity) != 0
    }

    /// State identity ignoring the step counter.
    pub fn same_configuration(&self, other: &WorldState) -> bool {
        self.agent == other.agent && self.inventory == other.inventory && self.alive == other.alive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub state: WorldState,
    /// Recipe applied by an `Interact`, if any.
    pub fired: Option<RecipeIdx>,
}

/// A layout bound to crafting rules.
#[derive(Debug, Clone)]
pub struct World {
    layout: Arc<Layout>,
    rules: Arc<Rules>,
    entity_kind: Vec<EntityKind>,
    entity_cell: Vec<Cell>,
    /// Entity instance occupying each cell (row-major), if any.
    occupant: Vec<Option<u8>>,
}

impl World {
    pub fn new(layout: Arc<Layout>, rules: Arc<Rules>) -> Result<Self, CraftError> {
        layout.validate()?;
        if layout.entities.len() > MAX_ENTITIES {
            return Err(CraftError::Capacity { what: "entities", count: layout.entities.len(), max: MAX_ENTITIES });
        }
        let mut entity_kind = Vec::with_capacity(layout.entities.len());
        let mut entity_cell = Vec::with_capacity(layout.entities.len());
        let mut occupant = vec![None; layout.width * layout.height];
        for (i, p) in layout.entities.iter().enumerate() {
            let kind = rules.entity_kind(&p.kind).ok_or_else(|| CraftError::UnknownEntity(p.kind.clone()))?;
            entity_kind.push(kind);
            entity_cell.push(p.cell());
            occupant[p.y as usize * layout.width + p.x as usize] = Some(i as u8);
        }
        Ok(Self { layout, rules, entity_kind, entity_cell, occupant })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn rules(&self) -> &Arc<Rules> {
        &self.rules
    }

    pub fn entity_count(&self) -> usize {
        self.entity_kind.len()
    }

    pub fn entity_kind(&self, e: usize) -> EntityKind {
        self.entity_kind[e]
    }

    pub fn entity_cell(&self, e: usize) -> Cell {
        self.entity_cell[e]
    }

    pub fn initial_state(&self) -> WorldState {
        let alive = if self.entity_kind.len() == 64 { u64::MAX } else { (1u64 << self.entity_kind.len()) - 1 };
        WorldState { agent: self.layout.agent_start, inventory: Inventory::default(), alive, step_count: 0 }
    }

    fn occupant_at(&self, c: Cell) -> Option<usize> {
        if !self.layout.in_bounds(c) {
            return None;
        }
        self.occupant[c.y as usize * self.layout.width + c.x as usize].map(usize::from)
    }

    /// Deterministic transition. `Terminate` is a no-op apart from the step counter.
    pub fn step(&self, state: &WorldState, action: PrimitiveAction) -> WorldState {
        self.step_detailed(state, action).state
    }

    pub fn step_detailed(&self, state: &WorldState, action: PrimitiveAction) -> StepOutcome {
        let mut next = *state;
        next.step_count += 1;
        let mut fired = None;
        if let Some((dx, dy)) = action.delta() {
            let target = Cell::new(state.agent.x + dx, state.agent.y + dy);
            if self.layout.terrain_at(target).is_some_and(Terrain::is_passable) {
                next.agent = target;
            }
        } else if action == PrimitiveAction::Interact {
            fired = self.interact(&mut next);
        }
        StepOutcome { state: next, fired }
    }

    /// Candidate cells in priority order: own cell, then up, down, left, right.
    fn interaction_cells(agent: Cell) -> [Cell; 5] {
        [
            agent,
            Cell::new(agent.x, agent.y - 1),
            Cell::new(agent.x, agent.y + 1),
            Cell::new(agent.x - 1, agent.y),
            Cell::new(agent.x + 1, agent.y),
        ]
    }

    fn interact(&self, state: &mut WorldState) -> Option<RecipeIdx> {
        for cell in Self::interaction_cells(state.agent) {
            let Some(e) = self.occupant_at(cell) else { continue };
            if !state.is_alive(e) {
                continue;
            }
            let kind = self.entity_kind[e];
            for &r in self.rules.recipes_for(kind) {
                let recipe = self.rules.recipe(r);
                if state.inventory.take_all(&recipe.inputs) {
                    state.inventory.add(recipe.output);
                    if self.rules.entity(kind).is_consumed_on_use() {
                        state.alive &= !(1u64 << e);
                    }
                    return Some(r);
                }
            }
        }
        None
    }

    /// Effect-based completion: `after` holds strictly more of `item` than `before`.
    pub fn produced_between(before: &WorldState, after: &WorldState, item: ItemKind) -> bool {
        after.inventory.count(item) > before.inventory.count(item)
    }

    /// Checks the state invariants against this world.
    pub fn check_state(&self, state: &WorldState) -> Result<(), String> {
        if !self.layout.is_floor(state.agent) {
            return Err(format!("agent at {:?} is not on floor", state.agent));
        }
        let n = self.entity_kind.len();
        if n < 64 && state.alive >> n != 0 {
            return Err("alive mask names nonexistent entities".into());
        }
        Ok(())
    }

    /// Nearest live instance of `kind` by Manhattan distance (ties: lowest instance index).
    pub fn nearest(&self, state: &WorldState, kind: EntityKind) -> Option<(usize, i32)> {
        (0..self.entity_kind.len())
            .filter(|&e| self.entity_kind[e] == kind && state.is_alive(e))
            .map(|e| (e, self.entity_cell[e].manhattan(state.agent)))
            .min_by_key(|&(e, d)| (d, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::craftworld::{EntityDef, Placement, Recipe};

    fn rules() -> Arc<Rules> {
        Arc::new(
            Rules::new(
                vec![
                    EntityDef { name: "tree".into(), station: false, respawn: false },
                    EntityDef { name: "workbench".into(), station: true, respawn: false },
                ],
                vec!["wood".into(), "plank".into()],
                vec![
                    Recipe { entity: EntityKind(0), inputs: vec![], output: ItemKind(0) },
                    Recipe { entity: EntityKind(1), inputs: vec![ItemKind(0)], output: ItemKind(1) },
                ],
            )
            .unwrap(),
        )
    }

    fn fixture() -> World {
        let mut terrain = vec![vec![Terrain::Floor; 5]; 5];
        terrain[1][3] = Terrain::Wall;
        terrain[3][1] = Terrain::Water;
        let layout = Layout {
            width: 5,
            height: 5,
            seed: 0,
            agent_start: Cell::new(2, 2),
            terrain,
            entities: vec![
                Placement { kind: "tree".into(), x: 2, y: 3 },
                Placement { kind: "workbench".into(), x: 4, y: 4 },
            ],
        };
        World::new(Arc::new(layout), rules()).unwrap()
    }

    #[test]
    fn moves_translate_or_block() {
        let w = fixture();
        let s = w.initial_state();
        assert_eq!(w.step(&s, PrimitiveAction::MoveUp).agent, Cell::new(2, 1));
        let mut corner = s;
        corner.agent = Cell::new(0, 0);
        assert_eq!(w.step(&corner, PrimitiveAction::MoveLeft).agent, Cell::new(0, 0));
        assert_eq!(w.step(&corner, PrimitiveAction::MoveUp).agent, Cell::new(0, 0));
        let mut by_wall = s;
        by_wall.agent = Cell::new(2, 1);
        assert_eq!(w.step(&by_wall, PrimitiveAction::MoveRight).agent, Cell::new(2, 1));
        let mut by_water = s;
        by_water.agent = Cell::new(1, 2);
        assert_eq!(w.step(&by_water, PrimitiveAction::MoveDown).agent, Cell::new(1, 2));
    }

    #[test]
    fn interact_gathers_and_consumes() {
        let w = fixture();
        let s = w.initial_state();
        let out = w.step_detailed(&s, PrimitiveAction::Interact);
        assert_eq!(out.fired, Some(0));
        assert_eq!(out.state.inventory.count(ItemKind(0)), 1);
        assert!(!out.state.is_alive(0));
        assert!(World::produced_between(&s, &out.state, ItemKind(0)));
        // Tree is gone: a second interaction does nothing.
        let again = w.step_detailed(&out.state, PrimitiveAction::Interact);
        assert_eq!(again.fired, None);
        assert_eq!(again.state.inventory, out.state.inventory);
    }

    #[test]
    fn stations_are_kept_and_need_inputs() {
        let w = fixture();
        let mut s = w.initial_state();
        s.agent = Cell::new(4, 3);
        let none = w.step_detailed(&s, PrimitiveAction::Interact);
        assert_eq!(none.fired, None);
        s.inventory.add(ItemKind(0));
        let made = w.step_detailed(&s, PrimitiveAction::Interact);
        assert_eq!(made.fired, Some(1));
        assert_eq!(made.state.inventory.count(ItemKind(0)), 0);
        assert_eq!(made.state.inventory.count(ItemKind(1)), 1);
        assert!(made.state.is_alive(1));
    }

    #[test]
    fn terminate_only_counts_a_step() {
        let w = fixture();
        let s = w.initial_state();
        let t = w.step(&s, PrimitiveAction::Terminate);
        assert!(t.same_configuration(&s));
        assert_eq!(t.step_count, 1);
    }

    #[test]
    fn completion_predicate() {
        let w = fixture();
        let s = w.initial_state();
        assert!(!World::produced_between(&s, &s, ItemKind(0)));
        let mut one = s;
        one.inventory.add(ItemKind(0));
        let mut other = one;
        other.inventory.add(ItemKind(1));
        assert!(!World::produced_between(&one, &other, ItemKind(0)));
    }
}
