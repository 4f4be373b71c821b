//! Deterministic 2D crafting gridworld.
//!
//! A [`Layout`] fixes the terrain and entity placements; [`World`] binds a layout
//! to a set of crafting [`Rules`] and exposes the pure transition function
//! [`World::step`] over [`WorldState`]s. Entities never move; they are either
//! alive or consumed. Entities do not block movement, only walls, water and the
//! grid boundary do. `Interact` acts on the entity under the agent or in one of
//! the four neighbouring cells.

mod layout;
mod observation;
mod rules;
mod world;

pub use layout::{generate_layout, Cell, GenerationParams, Layout, Placement, Terrain};
pub use observation::{ChannelMap, Observation};
pub use rules::{EntityDef, EntityKind, ItemKind, Recipe, RecipeIdx, Rules};
pub use world::{Inventory, PrimitiveAction, StepOutcome, World, WorldState, MAX_ENTITIES, MAX_ITEMS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CraftError {
    #[error("entity kind `{0}` is not in the generator palette")]
    NotInPalette(String),
    #[error("layout generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: u32, reason: String },
    #[error("unknown entity kind `{0}`")]
    UnknownEntity(String),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("layout file: {0}")]
    Format(String),
    #[error("observation needs {needed} channels but only {configured} are configured")]
    TooFewChannels { needed: usize, configured: usize },
    #[error("too many {what}: {count} (max {max})")]
    Capacity { what: &'static str, count: usize, max: usize },
}
