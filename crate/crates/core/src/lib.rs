//! Communication-efficient interactive learning over a crafting gridworld.
//!
//! A hierarchical learner and a simulated teacher exchange intentions drawn from
//! a task hierarchy. The learner either names an intention (verbal, answered by
//! a correction) or executes it (answered by a score) and is trained to keep
//! the long-term communication cost low.

pub mod baselines;
pub mod comms;
pub mod craftworld;
pub mod harness;
pub mod learner;
pub mod taskgraph;
pub mod util;

/// Task graphs shipped with the crate.
pub mod data {
    /// Desk-scale hierarchy rooted at `BakePork`.
    pub const BAKE_PORK_GRAPH: &str = include_str!("../data/bake_pork.toml");
    /// Superset hierarchy with several main tasks sharing subtasks.
    pub const FULL_GRAPH: &str = include_str!("../data/full.toml");
}
