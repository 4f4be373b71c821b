//! Command-line front end for training, evaluating and teaching agents.

use std::fs::File;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ceil_core::baselines::Method;
use ceil_core::comms::TeacherVariant;
use ceil_core::harness::{
    emit_plot_data, evaluate, interactive_teach, run_experiment, ExperimentConfig, HumanTeacher, RunRecord, Scenario,
    Setting,
};
use ceil_core::learner::Learner;
use ceil_core::taskgraph::{load_graph, LevelTable};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ceil", version, about = "Interactive hierarchical learning in a crafting gridworld")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Experiment config (TOML). Without one the desk defaults are used.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    teacher: Option<TeacherVariant>,
    #[arg(long)]
    budget: Option<u64>,
    /// Comma-separated run seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    main_task: Option<String>,
    #[arg(long, value_parser = parse_setting)]
    setting: Option<Setting>,
    #[arg(long)]
    pretrained: Option<String>,
    /// Override any config key, e.g. `--set hyper.margin=0.5` or `--set grid.width=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn parse_setting(s: &str) -> Result<Setting, String> {
    toml::Value::String(s.into()).try_into().map_err(|_| format!("unknown setting `{s}`"))
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a config and write the run records as CSV.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output CSV path.
        #[arg(short, long, default_value = "runs.csv")]
        out: PathBuf,
        /// Directory for final checkpoints.
        #[arg(long)]
        checkpoints: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on the config's held-out layouts.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train the full learner and its variant without TD updates side by side.
    Ablate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(short, long, default_value = "ablation.csv")]
        out: PathBuf,
    },
    /// Teach a learner interactively on stdin/stdout.
    Teach {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        episodes: u64,
        /// Show the simulator's acceptable answers.
        #[arg(long)]
        hints: bool,
    },
    /// Aggregate run CSVs into per-method curves.
    PlotData {
        /// Run-record CSV files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long, default_value = "plots")]
        out: PathBuf,
    },
    /// Check a task-graph file and print its tasks and levels.
    ValidateGraph {
        graph: PathBuf,
        /// Grid size used to place the reference layout for levels.
        #[arg(long, default_value_t = 6)]
        size: usize,
    },
    /// Print the fully-resolved config (defaults when no file is given).
    DescribeConfig {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().context("empty override key")?;
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .with_context(|| format!("`{p}` is not a table"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    doc.parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl ConfigArgs {
    /// Resolves the config and the directory its relative paths refer to.
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let (mut table, base) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let table: toml::Table = text.parse().with_context(|| format!("parsing {}", path.display()))?;
                (table, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => {
                let desk = ExperimentConfig::desk(Method::Ceil, TeacherVariant::PerformanceBased);
                (desk.to_toml().parse()?, PathBuf::from("."))
            }
        };
        let mut put = |k: &str, v: toml::Value| set_path(&mut table, k, v);
        if let Some(m) = self.method {
            put("method", m.name().into())?;
        }
        if let Some(t) = self.teacher {
            put("teacher", t.name().into())?;
        }
        if let Some(b) = self.budget {
            put("budget", (b as i64).into())?;
        }
        if let Some(s) = &self.seeds {
            put("seeds", toml::Value::Array(s.iter().map(|&x| (x as i64).into()).collect()))?;
        }
        if let Some(m) = &self.main_task {
            put("main_task", m.as_str().into())?;
        }
        if let Some(s) = self.setting {
            put("setting", s.name().into())?;
        }
        if let Some(p) = &self.pretrained {
            put("pretrained", p.as_str().into())?;
        }
        for o in &self.overrides {
            let (k, v) = o.split_once('=').with_context(|| format!("override `{o}` is not KEY=VALUE"))?;
            put(k.trim(), parse_value(v.trim()))?;
        }
        let config = ExperimentConfig::from_toml(&toml::to_string(&table)?)?;
        Ok((config, base))
    }
}

fn write_records(records: &[RunRecord], out: &Path) -> Result<()> {
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    RunRecord::write_csv(records, file)?;
    Ok(())
}

fn summarize(records: &[RunRecord]) {
    for r in records {
        if let Some(last) = r.final_row() {
            println!(
                "{} / {} / seed {}: success {:.3} after {} requests (cost {})",
                last.method,
                last.teacher.name(),
                last.seed,
                last.success_rate,
                last.request_count,
                last.total_cost
            );
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train { cfg, out, checkpoints } => {
            let (config, base) = cfg.resolve()?;
            let records = run_experiment(&config, &base, checkpoints.as_deref())?;
            write_records(&records, &out)?;
            summarize(&records);
        }
        Command::Eval { cfg, checkpoint } => {
            let (config, base) = cfg.resolve()?;
            let scenario = Scenario::new(&config, &base)?;
            let mut learner = Learner::load(&checkpoint, &scenario.graph)?;
            learner.attach_graph(&scenario.graph);
            let agent = ceil_core::harness::build_trainee(config.method, learner, config.ahil_threshold);
            let rate = evaluate(agent.as_ref(), &scenario.eval_envs()?, scenario.main)?;
            println!("success {rate:.4} over {} layouts", config.eval_layouts);
        }
        Command::Ablate { cfg, out } => {
            let (config, base) = cfg.resolve()?;
            let mut all = Vec::new();
            for method in [Method::Ceil, Method::CeilNoJcom] {
                let c = ExperimentConfig { method, ..config.clone() };
                all.extend(run_experiment(&c, &base, None)?);
            }
            write_records(&all, &out)?;
            summarize(&all);
        }
        Command::Teach { cfg, seed, episodes, hints } => {
            let (config, base) = cfg.resolve()?;
            let mut teacher = HumanTeacher::new(BufReader::new(io::stdin()), io::stdout());
            teacher.show_hints = hints;
            let record = interactive_teach(&config, &base, seed, episodes, &mut teacher)?;
            summarize(&[record]);
        }
        Command::PlotData { inputs, out } => {
            let mut records = Vec::new();
            for path in &inputs {
                let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
                records.extend(RunRecord::read_csv(file)?);
            }
            for f in emit_plot_data(&records, &out)? {
                println!("{}", f.display());
            }
        }
        Command::ValidateGraph { graph, size } => {
            let text = std::fs::read_to_string(&graph).with_context(|| format!("reading {}", graph.display()))?;
            let g = load_graph(&text)?;
            let params = g.generation_params(size, size);
            let layout = ceil_core::craftworld::generate_layout(0, &params)?;
            let world = ceil_core::craftworld::World::new(std::sync::Arc::new(layout), g.rules().clone())?;
            let levels = LevelTable::compute(&g, &world)?;
            println!("{} tasks, depth {}", g.len(), g.max_depth());
            for t in g.task_indices() {
                println!("  {:<20} group {:<3} level {}", g.id(t), g.level_group(t).label(), levels.level(t));
            }
        }
        Command::DescribeConfig { cfg } => {
            let (config, base) = cfg.resolve()?;
            if let Err(e) = Scenario::new(&config, &base) {
                bail!("config does not validate: {e}");
            }
            print!("{}", config.to_toml());
        }
    }
    Ok(())
}
