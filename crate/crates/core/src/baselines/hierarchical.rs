use serde::{Deserialize, Serialize};

use super::{EpisodeSummary, Method, Trainee};
use crate::comms::{CostLedger, FeedbackKind, Teacher, TeachingContext};
use crate::craftworld::{PrimitiveAction, WorldState};
use crate::learner::{epsilon_greedy, Env, Head, Learner, LearnerError, StackMemory, Transition, PRIMITIVE_COUNT};
use crate::taskgraph::{IntentionId, TaskIdx, ValidSet};
use crate::util::rng_from;

/// Per-intention running average of hindsight execution outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessPredictor {
    pub threshold: f64,
    outcomes: Vec<(u64, u64)>,
}

impl SuccessPredictor {
    pub fn new(threshold: f64) -> Self {
        Self { threshold, outcomes: Vec::new() }
    }

    /// Estimated success probability; 0 before any observation.
    pub fn predict(&self, task: TaskIdx) -> f64 {
        match self.outcomes.get(task.0) {
            Some(&(wins, n)) if n > 0 => wins as f64 / n as f64,
            _ => 0.0,
        }
    }

    pub fn should_execute(&self, task: TaskIdx) -> bool {
        self.predict(task) >= self.threshold
    }

    pub fn record(&mut self, task: TaskIdx, success: bool) {
        if self.outcomes.len() <= task.0 {
            self.outcomes.resize(task.0 + 1, (0, 0));
        }
        let e = &mut self.outcomes[task.0];
        e.0 += u64::from(success);
        e.1 += 1;
    }
}

/// Hierarchical imitation: every intention decision is proposed to the teacher
/// and labelled; executions get per-step planner labels. With a
/// [`SuccessPredictor`] this is the active variant, which executes intentions
/// it expects to complete and asks only for a score.
#[derive(Debug, Clone)]
pub struct HierarchicalImitation {
    learner: Learner,
    predictor: Option<SuccessPredictor>,
}

impl HierarchicalImitation {
    pub fn new(learner: Learner, predictor: Option<SuccessPredictor>) -> Self {
        Self { learner: learner.with_no_jcom(true), predictor }
    }

    pub fn predictor(&self) -> Option<&SuccessPredictor> {
        self.predictor.as_ref()
    }

    /// The imitation teacher expects decomposition wherever a subtask exists.
    fn strict(valid: &ValidSet) -> ValidSet {
        if valid.iter().any(|&v| v != IntentionId::Do) {
            valid.iter().copied().filter(|&v| v != IntentionId::Do).collect()
        } else {
            valid.clone()
        }
    }

    /// Primitive rollout of `task` with a planner label (and instructive charge) per step.
    fn labelled_execution(
        &mut self,
        env: &mut Env,
        task: TaskIdx,
        start: WorldState,
        epsilon: f64,
        ledger: &mut CostLedger,
    ) -> (WorldState, u64) {
        let intention = self.learner.binding().task_hash(task);
        let mut rng = std::mem::replace(self.learner.rng_mut(), rng_from(0));
        let mut state = start;
        let origin = env.view(&state);
        let mut view = origin.clone();
        let mut requests = 0;
        for _ in 0..self.learner.hyper().max_execution_steps {
            let graph = env.graph().clone();
            let Ok(expert) = env.planner().expert_action(&graph, &state, task, &start) else { break };
            let values = self.learner.primitive_values(&view, task);
            let a = PrimitiveAction::ALL[epsilon_greedy(&values, &[true; PRIMITIVE_COUNT], epsilon, &mut rng)];
            let kind = if a == expert { FeedbackKind::CorrectInstructive } else { FeedbackKind::IncorrectInstructive };
            let cost = ledger.charge_kind(kind);
            requests += 1;
            let next = env.world().step(&state, a);
            let next_view = env.execution_view(&next, &origin.features);
            self.learner.push_transition(Transition {
                head: Head::Primitive,
                state: view,
                intention,
                action: a.index(),
                reward: -(cost as f64) / 1e6,
                next_state: next_view.clone(),
                next_intention: Some(intention),
                terminal: a == PrimitiveAction::Terminate,
                label: Some(expert.index()),
                score: None,
            });
            state = next;
            view = next_view;
            if a == PrimitiveAction::Terminate {
                break;
            }
        }
        *self.learner.rng_mut() = rng;
        (state, requests)
    }
}

impl Trainee for HierarchicalImitation {
    fn method(&self) -> Method {
        if self.predictor.is_some() {
            Method::Ahil
        } else {
            Method::Hil
        }
    }

    fn train_episode(
        &mut self,
        env: &mut Env,
        teacher: &mut dyn Teacher,
        main: TaskIdx,
        start: WorldState,
        epsilon: f64,
        ledger: &mut CostLedger,
    ) -> Result<EpisodeSummary, LearnerError> {
        let mut stack = StackMemory::new(main, start);
        let mut state = start;
        let mut uttered = vec![main];
        let mut requests = 0;
        for _ in 0..self.learner.hyper().max_macro_steps {
            let Some(frame) = stack.top_frame().copied() else { break };
            let current = IntentionId::Task(frame.task);
            let valid = env.valid_set(&state, current, &frame.baseline);
            if self.predictor.as_ref().is_some_and(|p| p.should_execute(frame.task)) {
                let mut rng = std::mem::replace(self.learner.rng_mut(), rng_from(0));
                let (traj, views) = self.learner.execute_intention(env, &state, frame.task, epsilon, &mut rng);
                *self.learner.rng_mut() = rng;
                let ctx = TeachingContext {
                    graph: env.graph(),
                    levels: env.levels(),
                    world: env.world(),
                    state: &state,
                    current,
                    valid: &valid,
                };
                let feedback = teacher.evaluate(&ctx, &traj)?;
                ledger.charge(&feedback);
                requests += 1;
                let score = feedback.score().unwrap_or(0.0);
                self.learner.self_imitate(frame.task, &traj, &views, score);
                if let Some(p) = self.predictor.as_mut() {
                    p.record(frame.task, score > 0.0);
                }
                state = traj.end;
                stack.query(IntentionId::Done, &state)?;
                continue;
            }
            let view = env.view(&state);
            let values = self.learner.intention_values(&view, frame.task);
            let mut rng = std::mem::replace(self.learner.rng_mut(), rng_from(0));
            let action = epsilon_greedy(&values, self.learner.binding().available(), epsilon, &mut rng);
            *self.learner.rng_mut() = rng;
            let u = self
                .learner
                .binding()
                .intention_of(action)
                .ok_or_else(|| LearnerError::Protocol(format!("action {action} names no intention")))?;
            let strict = Self::strict(&valid);
            let ctx = TeachingContext {
                graph: env.graph(),
                levels: env.levels(),
                world: env.world(),
                state: &state,
                current,
                valid: &strict,
            };
            let feedback = teacher.instruct(&ctx, u)?;
            let cost = ledger.charge(&feedback);
            requests += 1;
            let intention = self.learner.binding().task_hash(frame.task);
            let label = feedback.correct_label().map(|c| self.learner.binding().action_of(c));
            let next_state = if u == IntentionId::Do {
                let (end, n) = self.labelled_execution(env, frame.task, state, epsilon, ledger);
                requests += n;
                if let Some(p) = self.predictor.as_mut() {
                    p.record(frame.task, env.graph().is_satisfied(&state, &end, frame.task));
                }
                stack.query(IntentionId::Done, &end)?;
                end
            } else {
                if let IntentionId::Task(t) = u {
                    uttered.push(t);
                }
                stack.query(u, &state)?;
                state
            };
            let next_view = if next_state == state { view.clone() } else { env.view(&next_state) };
            self.learner.push_transition(Transition {
                head: Head::Intention,
                state: view,
                intention,
                action,
                reward: -(cost as f64) / 1e6,
                next_state: next_view,
                next_intention: stack.top_frame().map(|f| self.learner.binding().task_hash(f.task)),
                terminal: stack.is_empty(),
                label,
                score: None,
            });
            state = next_state;
        }
        self.learner.train();
        Ok(EpisodeSummary { uttered, success: env.graph().is_satisfied(&start, &state, main), requests })
    }

    fn evaluate(&self, env: &Env, main: TaskIdx, start: WorldState) -> bool {
        match &self.predictor {
            Some(p) => self.learner.rollout_with(env, main, start, &|t| p.should_execute(t)).success,
            None => self.learner.rollout(env, main, start).success,
        }
    }

    fn learner(&self) -> &Learner {
        &self.learner
    }

    fn learner_mut(&mut self) -> &mut Learner {
        &mut self.learner
    }
}
