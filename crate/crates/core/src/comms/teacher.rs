use rand::distributions::{Distribution, WeightedIndex};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CommsError, Feedback, Trajectory, Utterance};
use crate::craftworld::{World, WorldState};
use crate::taskgraph::{IntentionId, LevelTable, TaskGraph, TaskIdx, ValidSet};
use crate::util::rng_from;

/// Additive smoothing of the performance-based correction weights.
pub const PERFORMANCE_SMOOTHING: f64 = 0.01;

/// Everything a teacher may look at when answering one learner turn.
#[derive(Debug, Clone, Copy)]
pub struct TeachingContext<'a> {
    pub graph: &'a TaskGraph,
    pub levels: &'a LevelTable,
    pub world: &'a World,
    pub state: &'a WorldState,
    /// Intention on top of the learner's stack.
    pub current: IntentionId,
    pub valid: &'a ValidSet,
}

impl TeachingContext<'_> {
    /// Abstraction level of an intention; `Done` is 0 and `Do` stands for the
    /// current intention.
    pub fn level_of(&self, u: IntentionId) -> u32 {
        match u {
            IntentionId::Task(t) => self.levels.level(t),
            IntentionId::Done => 0,
            IntentionId::Do => self.current.task().map_or(0, |t| self.levels.level(t)),
        }
    }
}

/// Anything that answers learner turns, simulated or human.
pub trait Teacher {
    /// Answers a verbal proposal. `uttered` may be `Do` for learners that ask
    /// before executing.
    fn instruct(&mut self, ctx: &TeachingContext<'_>, uttered: IntentionId) -> Result<Feedback, CommsError>;

    /// Scores an execution of `ctx.current`.
    fn evaluate(&mut self, ctx: &TeachingContext<'_>, trajectory: &Trajectory) -> Result<Feedback, CommsError>;

    fn respond(&mut self, ctx: &TeachingContext<'_>, utterance: &Utterance) -> Result<Feedback, CommsError> {
        match utterance {
            Utterance::Verbal(u) => self.instruct(ctx, *u),
            Utterance::Execute(t) => self.evaluate(ctx, t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeacherVariant {
    TopDown,
    LanguageBased,
    PerformanceBased,
}

impl TeacherVariant {
    pub const ALL: [TeacherVariant; 3] =
        [TeacherVariant::TopDown, TeacherVariant::LanguageBased, TeacherVariant::PerformanceBased];

    pub fn name(self) -> &'static str {
        match self {
            TeacherVariant::TopDown => "top_down",
            TeacherVariant::LanguageBased => "language_based",
            TeacherVariant::PerformanceBased => "performance_based",
        }
    }

    pub fn is_pragmatic(self) -> bool {
        self != TeacherVariant::TopDown
    }
}

impl std::str::FromStr for TeacherVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| format!("unknown teacher `{s}`"))
    }
}

/// Moving success rate of the learner per task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessStats {
    rho: Vec<f64>,
    decay: f64,
}

impl SuccessStats {
    pub fn new(decay: f64) -> Self {
        assert!(decay > 0.0 && decay < 1.0, "decay must lie in (0, 1)");
        Self { rho: Vec::new(), decay }
    }

    pub fn rho(&self, t: TaskIdx) -> f64 {
        self.rho.get(t.0).copied().unwrap_or(0.0)
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn update(&mut self, t: TaskIdx, success: bool) {
        if self.rho.len() <= t.0 {
            self.rho.resize(t.0 + 1, 0.0);
        }
        let r = &mut self.rho[t.0];
        *r = (1.0 - self.decay) * *r + self.decay * if success { 1.0 } else { 0.0 };
    }
}

/// One of the three scripted teachers.
#[derive(Debug, Clone)]
pub struct SimulatedTeacher {
    variant: TeacherVariant,
    stats: SuccessStats,
    rng: ChaCha8Rng,
}

impl SimulatedTeacher {
    pub fn new(variant: TeacherVariant, seed: u64, decay: f64) -> Self {
        Self { variant, stats: SuccessStats::new(decay), rng: rng_from(seed) }
    }

    pub fn variant(&self) -> TeacherVariant {
        self.variant
    }

    pub fn stats(&self) -> &SuccessStats {
        &self.stats
    }

    pub fn stats_mut(&mut self) -> &mut SuccessStats {
        &mut self.stats
    }

    /// Closed-form distribution over the correction returned for a wrong
    /// utterance. Candidates are `valid` without `Do`, or `Do` alone when
    /// nothing else is acceptable.
    pub fn correction_distribution(&self, ctx: &TeachingContext<'_>, uttered: IntentionId) -> Vec<(IntentionId, f64)> {
        let candidates: Vec<IntentionId> = {
            let c: Vec<IntentionId> = ctx.valid.iter().copied().filter(|&v| v != IntentionId::Do).collect();
            if c.is_empty() {
                vec![IntentionId::Do]
            } else {
                c
            }
        };
        let weights: Vec<f64> = match self.variant {
            TeacherVariant::TopDown => {
                let best = candidates.iter().map(|&v| ctx.level_of(v)).max().unwrap_or(0);
                // Ties resolve to the first candidate in intention order.
                let first = candidates.iter().position(|&v| ctx.level_of(v) == best).unwrap_or(0);
                (0..candidates.len()).map(|i| if i == first { 1.0 } else { 0.0 }).collect()
            }
            TeacherVariant::LanguageBased => {
                let target = ctx.level_of(uttered);
                let dist: Vec<u32> = candidates.iter().map(|&v| ctx.level_of(v).abs_diff(target)).collect();
                if dist.contains(&0) {
                    dist.iter().map(|&d| if d == 0 { 1.0 } else { 0.0 }).collect()
                } else {
                    dist.iter().map(|&d| 1.0 / d as f64).collect()
                }
            }
            TeacherVariant::PerformanceBased => candidates
                .iter()
                .map(|&v| v.task().map_or(0.0, |t| self.stats.rho(t)) + PERFORMANCE_SMOOTHING)
                .collect(),
        };
        let z: f64 = weights.iter().sum();
        candidates.into_iter().zip(weights).map(|(c, w)| (c, w / z)).collect()
    }

    fn sample_correction(&mut self, ctx: &TeachingContext<'_>, uttered: IntentionId) -> IntentionId {
        let dist = self.correction_distribution(ctx, uttered);
        if self.variant == TeacherVariant::TopDown || dist.len() == 1 {
            return dist.iter().find(|(_, p)| *p > 0.0).map_or(dist[0].0, |(c, _)| *c);
        }
        let idx = WeightedIndex::new(dist.iter().map(|(_, p)| *p)).expect("positive weights");
        dist[idx.sample(&mut self.rng)].0
    }
}

impl Teacher for SimulatedTeacher {
    fn instruct(&mut self, ctx: &TeachingContext<'_>, uttered: IntentionId) -> Result<Feedback, CommsError> {
        if ctx.valid.is_empty() {
            return Err(CommsError::EmptyValidSet);
        }
        if ctx.valid.contains(&uttered) {
            return Ok(Feedback::Instructive { correct: uttered, was_learner_correct: true });
        }
        let correct = self.sample_correction(ctx, uttered);
        Ok(Feedback::Instructive { correct, was_learner_correct: false })
    }

    fn evaluate(&mut self, ctx: &TeachingContext<'_>, trajectory: &Trajectory) -> Result<Feedback, CommsError> {
        let task = ctx.current.task().ok_or(CommsError::NotATask)?;
        let success = ctx.graph.is_satisfied(trajectory.start(), &trajectory.end, task);
        self.stats.update(task, success);
        Ok(Feedback::Evaluative { score: if success { 1.0 } else { 0.0 } })
    }
}
