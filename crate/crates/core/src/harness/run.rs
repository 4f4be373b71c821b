use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::metrics::{abstraction_histogram, evaluate};
use super::record::{RecordRow, RunRecord};
use super::{ExperimentConfig, HarnessError, Setting};
use crate::baselines::{
    CeilAgent, FlatImitation, FlatReinforcement, HierarchicalImitation, Method, SuccessPredictor, Trainee,
};
use crate::comms::{CostLedger, SimulatedTeacher};
use crate::craftworld::{generate_layout, GenerationParams, World, WorldState};
use crate::learner::{Env, Learner};
use crate::taskgraph::{LevelTable, TaskGraph, TaskIdx};
use crate::util::{combine, derive_seed};

/// Training layout seeds always have the top bit set; evaluation layouts use
/// small seeds, so the two never overlap.
pub const TRAIN_SEED_BIT: u64 = 1 << 63;

const STREAM_LEARNER: u64 = 0x11;
const STREAM_TEACHER: u64 = 0x22;

/// Consecutive request-free episodes after which a run is declared stuck.
const MAX_IDLE_EPISODES: u32 = 1000;

/// Seed of the `index`-th training layout of run `seed`.
pub fn train_layout_seed(seed: u64, setting: Setting, index: u64) -> u64 {
    let stream = match setting {
        Setting::Scratch => 0x5C,
        Setting::EnvAdapt => 0xEA,
        Setting::TaskAdapt => 0x7A,
    };
    TRAIN_SEED_BIT | (derive_seed(combine(seed, stream), index) >> 1)
}

/// Graph, abstraction levels and layout parameters shared by every run of a config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: Arc<TaskGraph>,
    pub levels: Arc<LevelTable>,
    pub params: GenerationParams,
    pub main: TaskIdx,
    pub channels: Option<usize>,
    pub config: ExperimentConfig,
    pub base: PathBuf,
}

impl Scenario {
    pub fn new(config: &ExperimentConfig, base: &Path) -> Result<Self, HarnessError> {
        let graph = Arc::new(config.load_graph(base)?);
        config.validate(&graph)?;
        let params = config.generation_params(&graph);
        let reference = world_for(&graph, &params, config.reference_layout_seed)?;
        let levels = Arc::new(LevelTable::compute(&graph, &reference)?);
        let main = graph.index_of(&config.main_task)?;
        Ok(Self {
            graph,
            levels,
            params,
            main,
            channels: config.grid.channels,
            config: config.clone(),
            base: base.into(),
        })
    }

    pub fn env(&self, layout_seed: u64) -> Result<(Env, WorldState), HarnessError> {
        let world = world_for(&self.graph, &self.params, layout_seed)?;
        let start = world.initial_state();
        let env = Env::new(self.graph.clone(), self.levels.clone(), world, self.channels, self.config.model.backend)?;
        Ok((env, start))
    }

    /// The fixed evaluation layouts `0..eval_layouts`.
    pub fn eval_envs(&self) -> Result<Vec<(Env, WorldState)>, HarnessError> {
        (0..self.config.eval_layouts as u64).into_par_iter().map(|s| self.env(s)).collect()
    }

    /// Fresh or pretrained agent for run `seed`.
    pub fn trainee(&self, seed: u64) -> Result<Box<dyn Trainee>, HarnessError> {
        let c = &self.config;
        let learner = match c.pretrained_path(&self.base, seed) {
            Some(path) => {
                let mut l = Learner::load(&path, &self.graph)?;
                l.set_hyper(c.hyper);
                l.attach_graph(&self.graph);
                l
            }
            None => Learner::new(c.hyper, c.model, &self.graph, derive_seed(seed, STREAM_LEARNER)),
        };
        Ok(build_trainee(c.method, learner, c.ahil_threshold))
    }
}

fn world_for(graph: &TaskGraph, params: &GenerationParams, seed: u64) -> Result<World, HarnessError> {
    let layout = generate_layout(seed, params)?;
    Ok(World::new(Arc::new(layout), graph.rules().clone())?)
}

pub fn build_trainee(method: Method, learner: Learner, ahil_threshold: f64) -> Box<dyn Trainee> {
    match method {
        Method::Ceil => Box::new(CeilAgent::new(learner.with_no_jcom(false))),
        Method::CeilNoJcom => Box::new(CeilAgent::new(learner.with_no_jcom(true))),
        Method::Fil => Box::new(FlatImitation::new(learner)),
        Method::Frl => Box::new(FlatReinforcement::new(learner)),
        Method::Hil => Box::new(HierarchicalImitation::new(learner, None)),
        Method::Ahil => Box::new(HierarchicalImitation::new(learner, Some(SuccessPredictor::new(ahil_threshold)))),
    }
}

/// Result of one seed: its evaluation curve and the trained agent.
pub struct SeedRun {
    pub record: RunRecord,
    pub agent: Box<dyn Trainee>,
    pub ledger: CostLedger,
}

/// Trains one seed until the request budget is spent, evaluating every
/// `eval_interval` of the budget.
pub fn run_seed(
    scenario: &Scenario,
    eval_envs: &[(Env, WorldState)],
    seed: u64,
    checkpoint_dir: Option<&Path>,
) -> Result<SeedRun, HarnessError> {
    let c = &scenario.config;
    let mut agent = scenario.trainee(seed)?;
    let mut teacher = SimulatedTeacher::new(c.teacher, derive_seed(seed, STREAM_TEACHER), c.success_decay);
    let mut ledger = CostLedger::new(&c.costs);
    let every = c.eval_every();
    let mut window: Vec<TaskIdx> = Vec::new();
    let mut record = RunRecord::default();
    let mut pool: Vec<Option<(Env, WorldState)>> = vec![None; c.train_layouts as usize];

    let row = |agent: &dyn Trainee, ledger: &CostLedger, window: &[TaskIdx]| -> Result<RecordRow, HarnessError> {
        let success_rate = evaluate(agent, eval_envs, scenario.main)?;
        let h = abstraction_histogram(window, &scenario.graph);
        Ok(RecordRow::new(c, seed, ledger, success_rate, &h))
    };

    record.rows.push(row(agent.as_ref(), &ledger, &window)?);
    let mut next_eval = every;
    let mut episode = 0u64;
    let mut idle = 0u32;
    while ledger.request_count() < c.budget {
        let used = ledger.request_count();
        let epsilon = c.hyper.epsilon(used, c.budget);
        let summary = if c.train_layouts > 0 {
            let slot = (episode % c.train_layouts) as usize;
            if pool[slot].is_none() {
                pool[slot] = Some(scenario.env(train_layout_seed(seed, c.setting, slot as u64))?);
            }
            let (env, start) = pool[slot].as_mut().unwrap();
            agent.train_episode(env, &mut teacher, scenario.main, *start, epsilon, &mut ledger)?
        } else {
            let (mut env, start) = scenario.env(train_layout_seed(seed, c.setting, episode))?;
            agent.train_episode(&mut env, &mut teacher, scenario.main, start, epsilon, &mut ledger)?
        };
        episode += 1;
        window.extend_from_slice(&summary.uttered);
        if ledger.request_count() == used {
            idle += 1;
            if idle >= MAX_IDLE_EPISODES {
                return Err(HarnessError::Stalled { episodes: idle });
            }
        } else {
            idle = 0;
        }
        if ledger.request_count() >= next_eval {
            record.rows.push(row(agent.as_ref(), &ledger, &window)?);
            window.clear();
            next_eval = (ledger.request_count() / every + 1) * every;
        }
    }
    if record.rows.last().is_some_and(|r| r.request_count < ledger.request_count()) {
        record.rows.push(row(agent.as_ref(), &ledger, &window)?);
    }
    if let Some(dir) = checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(e.to_string()))?;
        let path = dir.join(checkpoint_name(c, seed));
        agent.learner().save(&path)?;
        if let Some(last) = record.rows.last_mut() {
            last.checkpoint = Some(path.display().to_string());
        }
    }
    Ok(SeedRun { record, agent, ledger })
}

pub fn checkpoint_name(config: &ExperimentConfig, seed: u64) -> String {
    format!("{}_{}_{}_seed{seed}.json", config.name, config.method, config.teacher.name())
}

/// Runs every seed of `config` in parallel; records come back in seed order.
pub fn run_experiment(
    config: &ExperimentConfig,
    base: &Path,
    checkpoint_dir: Option<&Path>,
) -> Result<Vec<RunRecord>, HarnessError> {
    Ok(run_experiment_full(config, base, checkpoint_dir)?.into_iter().map(|r| r.record).collect())
}

/// Like [`run_experiment`] but keeps the trained agents.
pub fn run_experiment_full(
    config: &ExperimentConfig,
    base: &Path,
    checkpoint_dir: Option<&Path>,
) -> Result<Vec<SeedRun>, HarnessError> {
    let scenario = Scenario::new(config, base)?;
    let eval_envs = scenario.eval_envs()?;
    config.seeds.par_iter().map(|&s| run_seed(&scenario, &eval_envs, s, checkpoint_dir)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comms::TeacherVariant;

    fn tiny(method: Method) -> ExperimentConfig {
        let mut c = ExperimentConfig::desk(method, TeacherVariant::PerformanceBased);
        c.budget = 200;
        c.seeds = vec![3];
        c.eval_layouts = 4;
        c.eval_interval = 0.25;
        c
    }

    #[test]
    fn train_and_eval_seeds_are_disjoint() {
        for i in 0..1000 {
            assert!(train_layout_seed(7, Setting::Scratch, i) >= TRAIN_SEED_BIT);
        }
        assert_ne!(train_layout_seed(7, Setting::Scratch, 0), train_layout_seed(7, Setting::EnvAdapt, 0));
    }

    #[test]
    fn runs_are_deterministic_and_well_formed() {
        for method in Method::ALL {
            let c = tiny(method);
            let a = run_experiment(&c, Path::new("."), None).unwrap();
            let b = run_experiment(&c, Path::new("."), None).unwrap();
            assert_eq!(a, b, "{method}");
            let rows = &a[0].rows;
            assert_eq!(rows[0].request_count, 0);
            assert!(rows.windows(2).all(|w| w[0].request_count < w[1].request_count));
            assert!(rows.last().unwrap().request_count >= c.budget);
            assert!(rows.len() >= 3, "{method}: {} rows", rows.len());
        }
    }

    #[test]
    fn checkpoints_are_written_and_named() {
        let dir = tempfile::tempdir().unwrap();
        let c = tiny(Method::Ceil);
        let recs = run_experiment(&c, Path::new("."), Some(dir.path())).unwrap();
        let ck = recs[0].rows.last().unwrap().checkpoint.clone().unwrap();
        assert!(Path::new(&ck).exists());
        assert!(recs[0].rows[..recs[0].rows.len() - 1].iter().all(|r| r.checkpoint.is_none()));
    }
}
