use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::baselines::Method;
use crate::comms::{CostSchedule, TeacherVariant};
use crate::craftworld::{ChannelMap, GenerationParams};
use crate::data;
use crate::learner::{Hyperparams, QConfig};
use crate::taskgraph::{load_graph, TaskGraph};

/// Training setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Fresh learner.
    Scratch,
    /// Pretrained learner on layouts it has not seen.
    EnvAdapt,
    /// Pretrained learner on a new main task.
    TaskAdapt,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::Scratch => "scratch",
            Setting::EnvAdapt => "env_adapt",
            Setting::TaskAdapt => "task_adapt",
        }
    }

    pub fn needs_checkpoint(self) -> bool {
        self != Setting::Scratch
    }
}

/// Grid size and layout generator knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub wall_fraction: f64,
    pub water_fraction: f64,
    pub extra_entities: u32,
    /// Observation channel count; `None` uses exactly as many as needed.
    pub channels: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { width: 6, height: 6, wall_fraction: 0.0, water_fraction: 0.0, extra_entities: 0, channels: None }
    }
}

/// Everything needed to reproduce a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub method: Method,
    pub teacher: TeacherVariant,
    /// `builtin:bake_pork`, `builtin:full`, or a path (relative to the config file).
    #[serde(default = "default_graph")]
    pub graph: String,
    pub main_task: String,
    #[serde(default = "default_setting")]
    pub setting: Setting,
    /// Feedback requests allowed per seed.
    pub budget: u64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_eval_layouts")]
    pub eval_layouts: usize,
    /// Evaluation cadence as a fraction of the budget.
    #[serde(default = "default_eval_interval")]
    pub eval_interval: f64,
    /// Size of the training layout pool; 0 draws a fresh layout every episode.
    #[serde(default)]
    pub train_layouts: u64,
    /// Layout on which abstraction levels are measured.
    #[serde(default)]
    pub reference_layout_seed: u64,
    /// Decay of the teacher's moving success rates.
    #[serde(default = "default_success_decay")]
    pub success_decay: f64,
    #[serde(default = "default_ahil_threshold")]
    pub ahil_threshold: f64,
    /// Checkpoint for adaptation settings; `{seed}` is replaced by the run seed.
    #[serde(default)]
    pub pretrained: Option<String>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub model: QConfig,
    #[serde(default)]
    pub hyper: Hyperparams,
    #[serde(default)]
    pub costs: CostSchedule,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_graph() -> String {
    "builtin:bake_pork".into()
}

fn default_setting() -> Setting {
    Setting::Scratch
}

fn default_eval_layouts() -> usize {
    50
}

fn default_eval_interval() -> f64 {
    0.02
}

fn default_success_decay() -> f64 {
    0.1
}

fn default_ahil_threshold() -> f64 {
    0.5
}

impl ExperimentConfig {
    /// Desk-scale defaults for `method` with `teacher`.
    pub fn desk(method: Method, teacher: TeacherVariant) -> Self {
        Self {
            name: default_name(),
            method,
            teacher,
            graph: default_graph(),
            main_task: "BakePork".into(),
            setting: Setting::Scratch,
            budget: 50_000,
            seeds: vec![0, 1, 2, 3],
            eval_layouts: default_eval_layouts(),
            eval_interval: default_eval_interval(),
            train_layouts: 0,
            reference_layout_seed: 0,
            success_decay: default_success_decay(),
            ahil_threshold: default_ahil_threshold(),
            pretrained: None,
            grid: GridConfig::default(),
            model: QConfig::default(),
            hyper: Hyperparams::default(),
            costs: CostSchedule::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let c: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_toml(&text)?, base))
    }

    /// Loads the configured task graph; relative paths resolve against `base`.
    pub fn load_graph(&self, base: &Path) -> Result<TaskGraph, HarnessError> {
        let text = match self.graph.as_str() {
            "builtin:bake_pork" => data::BAKE_PORK_GRAPH.to_string(),
            "builtin:full" => data::FULL_GRAPH.to_string(),
            p => {
                let path = base.join(p);
                std::fs::read_to_string(&path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?
            }
        };
        Ok(load_graph(&text)?)
    }

    pub fn generation_params(&self, graph: &TaskGraph) -> GenerationParams {
        let mut p = graph.generation_params(self.grid.width, self.grid.height);
        p.wall_fraction = self.grid.wall_fraction;
        p.water_fraction = self.grid.water_fraction;
        p.extra_entities = self.grid.extra_entities;
        p
    }

    /// Checks the config against itself and against `graph`.
    pub fn validate(&self, graph: &TaskGraph) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.budget == 0 {
            return bad("budget must be positive".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.eval_layouts == 0 {
            return bad("eval_layouts must be positive".into());
        }
        if !(self.eval_interval > 0.0 && self.eval_interval <= 1.0) {
            return bad(format!("eval_interval must lie in (0, 1], got {}", self.eval_interval));
        }
        if !(self.success_decay > 0.0 && self.success_decay < 1.0) {
            return bad(format!("success_decay must lie in (0, 1), got {}", self.success_decay));
        }
        if !(self.ahil_threshold > 0.0 && self.ahil_threshold < 1.0) {
            return bad(format!("ahil_threshold must lie in (0, 1), got {}", self.ahil_threshold));
        }
        self.hyper.validate().map_err(HarnessError::Config)?;
        ChannelMap::new(graph.rules(), self.grid.channels)?;
        self.costs.validate().map_err(HarnessError::Config)?;
        let main = graph.index_of(&self.main_task)?;
        if !graph.is_root(main) {
            return bad(format!("main task `{}` is not a root of the graph", self.main_task));
        }
        if self.setting.needs_checkpoint() && self.pretrained.is_none() {
            return bad(format!("setting `{}` needs a pretrained checkpoint", self.setting.name()));
        }
        Ok(())
    }

    /// Requests between evaluations.
    pub fn eval_every(&self) -> u64 {
        ((self.budget as f64 * self.eval_interval).round() as u64).max(1)
    }

    pub fn pretrained_path(&self, base: &Path, seed: u64) -> Option<PathBuf> {
        self.pretrained.as_ref().map(|p| base.join(p.replace("{seed}", &seed.to_string())))
    }
}
