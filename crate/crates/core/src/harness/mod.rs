//! Experiment harness: configs, multi-seed training runs with periodic
//! evaluation, CSV run records, plot data and a human-teacher channel.

mod config;
mod metrics;
mod plot;
mod record;
mod run;
mod teach;

pub use config::{ExperimentConfig, GridConfig, Setting};
pub use metrics::{abstraction_histogram, evaluate, Histogram};
pub use plot::{aggregate, emit_plot_data, Curve, CurvePoint};
pub use record::{RecordRow, RunRecord};
pub use run::{
    build_trainee, checkpoint_name, run_experiment, run_experiment_full, run_seed, train_layout_seed, Scenario,
    SeedRun, TRAIN_SEED_BIT,
};
pub use teach::{intention_name, interactive_teach, parse_intention, HumanTeacher};

use thiserror::Error;

use crate::craftworld::CraftError;
use crate::learner::LearnerError;
use crate::taskgraph::GraphError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    World(#[from] CraftError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("i/o: {0}")]
    Io(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("evaluation needs at least one layout")]
    EmptyEvaluation,
    #[error("no feedback requested for {episodes} consecutive episodes")]
    Stalled { episodes: u32 },
}
