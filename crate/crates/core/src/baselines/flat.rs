use rand_chacha::ChaCha8Rng;

use super::{EpisodeSummary, Method, Trainee};
use crate::comms::{CostLedger, FeedbackKind, Teacher, TeachingContext};
use crate::craftworld::{PrimitiveAction, WorldState};
use crate::learner::{epsilon_greedy, Env, Head, Learner, LearnerError, Transition, PRIMITIVE_COUNT};
use crate::taskgraph::{IntentionId, TaskIdx};
use crate::util::rng_from;

fn take_rng(learner: &mut Learner) -> ChaCha8Rng {
    std::mem::replace(learner.rng_mut(), rng_from(0))
}

/// Flat imitation: DAgger over primitive actions with planner labels at every step.
#[derive(Debug, Clone)]
pub struct FlatImitation {
    learner: Learner,
}

impl FlatImitation {
    /// Temporal-difference updates are switched off; only labels train the head.
    pub fn new(learner: Learner) -> Self {
        Self { learner: learner.with_no_jcom(true) }
    }
}

impl Trainee for FlatImitation {
    fn method(&self) -> Method {
        Method::Fil
    }

    fn train_episode(
        &mut self,
        env: &mut Env,
        _teacher: &mut dyn Teacher,
        main: TaskIdx,
        start: WorldState,
        epsilon: f64,
        ledger: &mut CostLedger,
    ) -> Result<EpisodeSummary, LearnerError> {
        let intention = self.learner.binding().task_hash(main);
        let mut state = start;
        let origin = env.view(&state);
        let mut view = origin.clone();
        let mut requests = 0;
        let mut rng = take_rng(&mut self.learner);
        for _ in 0..self.learner.hyper().max_execution_steps {
            let graph = env.graph().clone();
            let Ok(expert) = env.planner().expert_action(&graph, &state, main, &start) else { break };
            let values = self.learner.primitive_values(&view, main);
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
        self.learner.train();
        Ok(EpisodeSummary { uttered: Vec::new(), success: env.graph().is_satisfied(&start, &state, main), requests })
    }

    fn evaluate(&self, env: &Env, main: TaskIdx, start: WorldState) -> bool {
        self.learner.flat_rollout(env, main, start).success
    }

    fn learner(&self) -> &Learner {
        &self.learner
    }

    fn learner_mut(&mut self) -> &mut Learner {
        &mut self.learner
    }
}

/// Flat reinforcement learning: ε-greedy Q-learning over primitive actions with
/// one evaluative score per episode as the only reward.
#[derive(Debug, Clone)]
pub struct FlatReinforcement {
    learner: Learner,
}

impl FlatReinforcement {
    pub fn new(learner: Learner) -> Self {
        Self { learner: learner.with_no_jcom(false) }
    }
}

impl Trainee for FlatReinforcement {
    fn method(&self) -> Method {
        Method::Frl
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
        let intention = self.learner.binding().task_hash(main);
        let mut rng = take_rng(&mut self.learner);
        let (traj, mut views) = self.learner.execute_intention(env, &start, main, epsilon, &mut rng);
        *self.learner.rng_mut() = rng;
        let current = IntentionId::Task(main);
        let valid = env.valid_set(&start, current, &start);
        let ctx = TeachingContext {
            graph: env.graph(),
            levels: env.levels(),
            world: env.world(),
            state: &start,
            current,
            valid: &valid,
        };
        let feedback = teacher.evaluate(&ctx, &traj)?;
        ledger.charge(&feedback);
        let score = feedback.score().unwrap_or(0.0);
        let end = env.execution_view(&traj.end, &views[0].features);
        views.push(end);
        let n = traj.len();
        for (k, (_, a)) in traj.steps.iter().enumerate() {
            let last = k + 1 == n;
            self.learner.push_transition(Transition {
                head: Head::Primitive,
                state: views[k].clone(),
                intention,
                action: a.index(),
                reward: if last { score } else { 0.0 },
                next_state: views[k + 1].clone(),
                next_intention: Some(intention),
                terminal: last,
                label: None,
                score: last.then_some(score),
            });
        }
        self.learner.train();
        Ok(EpisodeSummary { uttered: Vec::new(), success: score > 0.0, requests: 1 })
    }

    fn evaluate(&self, env: &Env, main: TaskIdx, start: WorldState) -> bool {
        self.learner.flat_rollout(env, main, start).success
    }

    fn learner(&self) -> &Learner {
        &self.learner
    }

    fn learner_mut(&mut self) -> &mut Learner {
        &mut self.learner
    }
}
