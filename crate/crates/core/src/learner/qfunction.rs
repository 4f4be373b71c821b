use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureMode, Features};
use crate::craftworld::PrimitiveAction;
use crate::util::{combine, FastMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Head {
    /// Verbal actions and `Do`.
    Intention,
    /// Primitive actions.
    Primitive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// Lookup tables over hashed feature tiles.
    Tabular,
    /// Linear functions of the flattened observation.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QConfig {
    pub backend: BackendKind,
    #[serde(default = "default_mode")]
    pub features: FeatureMode,
    /// Adds intention-agnostic tiles to the primitive head (tabular, relational).
    #[serde(default)]
    pub shared_primitive_tiles: bool,
    /// Adds primitive-head tiles keyed on the items gained or lost during the
    /// current execution instead of the whole inventory (tabular, relational).
    #[serde(default = "default_true")]
    pub progress_tiles: bool,
}

fn default_true() -> bool {
    true
}

fn default_mode() -> FeatureMode {
    FeatureMode::Relational
}

impl Default for QConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Tabular,
            features: FeatureMode::Relational,
            shared_primitive_tiles: false,
            progress_tiles: true,
        }
    }
}

const TAG_INTENTION: u64 = 0x6a09_e667_f3bc_c908;
const TAG_PRIMITIVE: u64 = 0xbb67_ae85_84ca_a73b;
const TAG_SHARED: u64 = 0x3c6e_f372_fe94_f82b;
const TAG_EXACT: u64 = 0xa54f_f53a_5f1d_36f1;
const TAG_PROGRESS: u64 = 0x510e_527f_ade6_82d1;

/// Action-value function `Q(s, a; i)` with an intention head and a primitive head.
///
/// The tabular backend sums one table row per active tile; the linear backend
/// keeps one weight vector per (head, intention, action).
#[derive(Debug, Clone, PartialEq)]
pub struct QFunction {
    config: QConfig,
    rows: FastMap<u64, Vec<f64>>,
}

/// Serializable copy of the parameters with sorted keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSnapshot {
    pub config: QConfig,
    pub rows: BTreeMap<u64, Vec<f64>>,
}

impl QFunction {
    pub fn new(config: QConfig) -> Self {
        Self { config, rows: FastMap::default() }
    }

    pub fn config(&self) -> &QConfig {
        &self.config
    }

    /// Number of stored parameter rows.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn tiles(&self, head: Head, f: &Features, intention: u64, out: &mut Vec<u64>) {
        out.clear();
        match (head, self.config.features) {
            (Head::Intention, FeatureMode::Relational) => {
                out.push(combine(TAG_INTENTION, combine(intention, f.inventory)))
            }
            (Head::Intention, FeatureMode::Exact) => {
                out.push(combine(TAG_INTENTION ^ TAG_EXACT, combine(intention, f.exact)))
            }
            (Head::Primitive, FeatureMode::Exact) => {
                out.push(combine(TAG_PRIMITIVE ^ TAG_EXACT, combine(intention, f.exact)))
            }
            (Head::Primitive, FeatureMode::Relational) => {
                let base = combine(TAG_PRIMITIVE, combine(intention, f.inventory));
                let shared = combine(TAG_SHARED, f.inventory);
                let progress = combine(TAG_PROGRESS, combine(intention, f.progress));
                for &(kind, rel) in &f.relations {
                    let kr = combine(kind, rel.code());
                    out.push(combine(base, kr));
                    if self.config.shared_primitive_tiles {
                        out.push(combine(shared, kr));
                    }
                    if self.config.progress_tiles {
                        out.push(combine(progress, kr));
                    }
                }
                if out.is_empty() {
                    out.push(base);
                }
            }
        }
    }

    fn linear_key(head: Head, intention: u64, action: usize) -> u64 {
        let tag = match head {
            Head::Intention => TAG_INTENTION,
            Head::Primitive => TAG_PRIMITIVE,
        };
        combine(combine(tag, intention), action as u64)
    }

    pub fn value(&self, head: Head, f: &Features, intention: u64, action: usize) -> f64 {
        match self.config.backend {
            BackendKind::Tabular => {
                let mut tiles = Vec::new();
                self.tiles(head, f, intention, &mut tiles);
                tiles.iter().map(|t| self.rows.get(t).and_then(|r| r.get(action)).copied().unwrap_or(0.0)).sum()
            }
            BackendKind::Linear => self
                .rows
                .get(&Self::linear_key(head, intention, action))
                .map_or(0.0, |w| w.iter().zip(&f.dense).map(|(w, x)| w * f64::from(*x)).sum()),
        }
    }

    /// Values of actions `0..n`.
    pub fn values(&self, head: Head, f: &Features, intention: u64, n: usize) -> Vec<f64> {
        match self.config.backend {
            BackendKind::Tabular => {
                let mut tiles = Vec::new();
                self.tiles(head, f, intention, &mut tiles);
                let mut out = vec![0.0; n];
                for t in &tiles {
                    if let Some(row) = self.rows.get(t) {
                        for (o, v) in out.iter_mut().zip(row) {
                            *o += v;
                        }
                    }
                }
                out
            }
            BackendKind::Linear => (0..n).map(|a| self.value(head, f, intention, a)).collect(),
        }
    }

    /// Moves `Q(s, action; i)` along its gradient by `step`. For the tabular
    /// backend the value changes by exactly `step` (split evenly over tiles).
    pub fn nudge(&mut self, head: Head, f: &Features, intention: u64, action: usize, step: f64) {
        if step == 0.0 {
            return;
        }
        match self.config.backend {
            BackendKind::Tabular => {
                let mut tiles = Vec::new();
                self.tiles(head, f, intention, &mut tiles);
                let share = step / tiles.len() as f64;
                for t in tiles {
                    let row = self.rows.entry(t).or_default();
                    if row.len() <= action {
                        row.resize(action + 1, 0.0);
                    }
                    row[action] += share;
                }
            }
            BackendKind::Linear => {
                let w = self
                    .rows
                    .entry(Self::linear_key(head, intention, action))
                    .or_insert_with(|| vec![0.0; f.dense.len()]);
                for (w, x) in w.iter_mut().zip(&f.dense) {
                    *w += step * f64::from(*x);
                }
            }
        }
    }

    pub fn snapshot(&self) -> QSnapshot {
        QSnapshot { config: self.config, rows: self.rows.iter().map(|(k, v)| (*k, v.clone())).collect() }
    }

    pub fn from_snapshot(s: QSnapshot) -> Self {
        Self { config: s.config, rows: s.rows.into_iter().collect() }
    }
}

/// Index of the largest value among `available` actions; ties go to the lowest index.
pub fn greedy(values: &[f64], available: &[bool]) -> usize {
    let mut best: Option<usize> = None;
    for (a, &v) in values.iter().enumerate() {
        if available.get(a).copied().unwrap_or(true) && best.is_none_or(|b| v > values[b]) {
            best = Some(a);
        }
    }
    best.expect("at least one available action")
}

/// ε-greedy choice: uniform over `available` with probability ε, else [`greedy`].
pub fn epsilon_greedy(values: &[f64], available: &[bool], epsilon: f64, rng: &mut impl Rng) -> usize {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        let choices: Vec<usize> = (0..values.len()).filter(|&a| available.get(a).copied().unwrap_or(true)).collect();
        choices[rng.gen_range(0..choices.len())]
    } else {
        greedy(values, available)
    }
}

pub const PRIMITIVE_COUNT: usize = PrimitiveAction::ALL.len();
