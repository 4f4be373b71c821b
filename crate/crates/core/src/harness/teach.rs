use std::io::{BufRead, Write};
use std::path::Path;

use super::metrics::{abstraction_histogram, evaluate};
use super::record::{RecordRow, RunRecord};
use super::run::{train_layout_seed, Scenario};
use super::{ExperimentConfig, HarnessError};
use crate::comms::{CommsError, CostLedger, Feedback, Teacher, TeachingContext, Trajectory};
use crate::learner::LearnerError;
use crate::taskgraph::{IntentionId, TaskGraph};

pub fn intention_name(graph: &TaskGraph, u: IntentionId) -> &str {
    match u {
        IntentionId::Task(t) => graph.id(t),
        IntentionId::Do => IntentionId::DO_SYMBOL,
        IntentionId::Done => IntentionId::DONE_SYMBOL,
    }
}

pub fn parse_intention(graph: &TaskGraph, s: &str) -> Option<IntentionId> {
    match s {
        IntentionId::DO_SYMBOL => Some(IntentionId::Do),
        IntentionId::DONE_SYMBOL => Some(IntentionId::Done),
        _ => graph.index_of(s).ok().map(IntentionId::Task),
    }
}

/// A teacher answering over a text channel. Invalid answers are re-prompted
/// and never charged; end of input aborts the conversation.
pub struct HumanTeacher<R, W> {
    input: R,
    output: W,
    /// Print the simulator's valid set as a hint.
    pub show_hints: bool,
}

impl<R: BufRead, W: Write> HumanTeacher<R, W> {
    pub fn new(input: R, output: W) -> Self {
        Self { input, output, show_hints: false }
    }

    pub fn into_output(self) -> W {
        self.output
    }

    fn say(&mut self, text: &str) {
        let _ = writeln!(self.output, "{text}");
        let _ = self.output.flush();
    }

    fn ask<T>(&mut self, prompt: &str, mut parse: impl FnMut(&str) -> Option<T>) -> Result<T, CommsError> {
        loop {
            let _ = write!(self.output, "{prompt} ");
            let _ = self.output.flush();
            let mut line = String::new();
            let n = self.input.read_line(&mut line).map_err(|_| CommsError::Aborted)?;
            if n == 0 {
                return Err(CommsError::Aborted);
            }
            match parse(line.trim()) {
                Some(v) => return Ok(v),
                None => self.say(&format!("unrecognised answer `{}`; try again", line.trim())),
            }
        }
    }

    fn describe(&mut self, ctx: &TeachingContext<'_>) {
        let rules = ctx.world.rules();
        let held: Vec<String> = rules
            .items()
            .iter()
            .enumerate()
            .filter_map(|(i, name)| {
                let n = ctx.state.inventory.raw()[i];
                (n > 0).then(|| format!("{name}x{n}"))
            })
            .collect();
        self.say(&format!(
            "agent at ({}, {}), holding [{}], working on {}",
            ctx.state.agent.x,
            ctx.state.agent.y,
            held.join(", "),
            intention_name(ctx.graph, ctx.current)
        ));
        if self.show_hints {
            let hint: Vec<&str> = ctx.valid.iter().map(|&v| intention_name(ctx.graph, v)).collect();
            self.say(&format!("hint: acceptable answers are {{{}}}", hint.join(", ")));
        }
    }
}

impl<R: BufRead, W: Write> Teacher for HumanTeacher<R, W> {
    fn instruct(&mut self, ctx: &TeachingContext<'_>, uttered: IntentionId) -> Result<Feedback, CommsError> {
        self.describe(ctx);
        let graph = ctx.graph;
        self.say(&format!("learner proposes: {}", intention_name(graph, uttered)));
        let correct = self.ask("correct intention (task id, DO or DONE):", |s| parse_intention(graph, s))?;
        Ok(Feedback::Instructive { correct, was_learner_correct: correct == uttered })
    }

    fn evaluate(&mut self, ctx: &TeachingContext<'_>, trajectory: &Trajectory) -> Result<Feedback, CommsError> {
        ctx.current.task().ok_or(CommsError::NotATask)?;
        self.describe(ctx);
        let end = trajectory.end;
        self.say(&format!(
            "learner executed {} primitive steps, ending at ({}, {})",
            trajectory.len(),
            end.agent.x,
            end.agent.y
        ));
        let score = self.ask("score in [0, 1] (or y/n):", |s| match s {
            "y" | "yes" => Some(1.0),
            "n" | "no" => Some(0.0),
            _ => s.parse::<f64>().ok().filter(|x| (0.0..=1.0).contains(x)),
        })?;
        Ok(Feedback::Evaluative { score })
    }
}

/// Trains run `seed` of `config` with a human teacher for up to `episodes`
/// episodes or until input ends, then evaluates once.
pub fn interactive_teach<R: BufRead, W: Write>(
    config: &ExperimentConfig,
    base: &Path,
    seed: u64,
    episodes: u64,
    teacher: &mut HumanTeacher<R, W>,
) -> Result<RunRecord, HarnessError> {
    let scenario = Scenario::new(config, base)?;
    let eval_envs = scenario.eval_envs()?;
    let mut agent = scenario.trainee(seed)?;
    let mut ledger = CostLedger::new(&config.costs);
    let mut uttered = Vec::new();
    for episode in 0..episodes {
        if ledger.request_count() >= config.budget {
            break;
        }
        let (mut env, start) = scenario.env(train_layout_seed(seed, config.setting, episode))?;
        teacher.say(&format!("episode {episode}: main task {}", config.main_task));
        let epsilon = config.hyper.epsilon(ledger.request_count(), config.budget);
        match agent.train_episode(&mut env, teacher, scenario.main, start, epsilon, &mut ledger) {
            Ok(summary) => uttered.extend(summary.uttered),
            Err(LearnerError::Teacher(CommsError::Aborted)) => break,
            Err(e) => return Err(e.into()),
        }
    }
    let success_rate = evaluate(agent.as_ref(), &eval_envs, scenario.main)?;
    let h = abstraction_histogram(&uttered, &scenario.graph);
    Ok(RunRecord { rows: vec![RecordRow::new(config, seed, &ledger, success_rate, &h)] })
}
