use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::world::MAX_ITEMS;
use super::CraftError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityKind(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ItemKind(pub u16);

pub type RecipeIdx = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityDef {
    pub name: String,
    /// Stations (furnace, workbench) are never consumed.
    #[serde(default)]
    pub station: bool,
    /// Resource entities that respawn are not consumed either.
    #[serde(default)]
    pub respawn: bool,
}

impl EntityDef {
    pub fn is_consumed_on_use(&self) -> bool {
        !self.station && !self.respawn
    }
}

/// One crafting rule: interacting with `entity` while holding every item of
/// `inputs` removes the inputs and adds one `output`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recipe {
    pub entity: EntityKind,
    pub inputs: Vec<ItemKind>,
    pub output: ItemKind,
}

/// The crafting rules of a world: entity palette, item set and recipes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rules {
    entities: Vec<EntityDef>,
    items: Vec<String>,
    recipes: Vec<Recipe>,
    by_entity: Vec<Vec<RecipeIdx>>,
    entity_index: HashMap<String, EntityKind>,
    item_index: HashMap<String, ItemKind>,
}

impl Rules {
    pub fn new(entities: Vec<EntityDef>, items: Vec<String>, recipes: Vec<Recipe>) -> Result<Self, CraftError> {
        if entities.len() > u16::MAX as usize {
            return Err(CraftError::Capacity { what: "entity kinds", count: entities.len(), max: u16::MAX as usize });
        }
        if items.len() > MAX_ITEMS {
            return Err(CraftError::Capacity { what: "item kinds", count: items.len(), max: MAX_ITEMS });
        }
        let mut entity_index = HashMap::new();
        for (i, e) in entities.iter().enumerate() {
            if entity_index.insert(e.name.clone(), EntityKind(i as u16)).is_some() {
                return Err(CraftError::InvalidLayout(format!("duplicate entity kind `{}`", e.name)));
            }
        }
        let mut item_index = HashMap::new();
        for (i, name) in items.iter().enumerate() {
            if item_index.insert(name.clone(), ItemKind(i as u16)).is_some() {
                return Err(CraftError::InvalidLayout(format!("duplicate item `{name}`")));
            }
        }
        let mut by_entity = vec![Vec::new(); entities.len()];
        for (r, recipe) in recipes.iter().enumerate() {
            let slot = by_entity
                .get_mut(recipe.entity.0 as usize)
                .ok_or_else(|| CraftError::UnknownEntity(format!("#{}", recipe.entity.0)))?;
            slot.push(r);
        }
        Ok(Self { entities, items, recipes, by_entity, entity_index, item_index })
    }

    pub fn entities(&self) -> &[EntityDef] {
        &self.entities
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn recipes(&self) -> &[Recipe] {
        &self.recipes
    }

    pub fn recipe(&self, idx: RecipeIdx) -> &Recipe {
        &self.recipes[idx]
    }

    pub fn recipes_for(&self, kind: EntityKind) -> &[RecipeIdx] {
        &self.by_entity[kind.0 as usize]
    }

    pub fn entity(&self, kind: EntityKind) -> &EntityDef {
        &self.entities[kind.0 as usize]
    }

    pub fn entity_kind(&self, name: &str) -> Option<EntityKind> {
        self.entity_index.get(name).copied()
    }

    pub fn item_kind(&self, name: &str) -> Option<ItemKind> {
        self.item_index.get(name).copied()
    }

    pub fn item_name(&self, item: ItemKind) -> &str {
        &self.items[item.0 as usize]
    }

    pub fn entity_name(&self, kind: EntityKind) -> &str {
        &self.entities[kind.0 as usize].name
    }
}
