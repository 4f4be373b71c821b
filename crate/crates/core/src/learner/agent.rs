use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::Env;
use super::features::StateView;
use super::hyper::Hyperparams;
use super::memory::{Frame, StackMemory};
use super::qfunction::{epsilon_greedy, greedy, Head, QConfig, QFunction, QSnapshot, PRIMITIVE_COUNT};
use super::replay::{ReplayBuffer, Transition};
use super::updates::{loop_erased, update_margin, update_rl, update_self_imitation, ActionSpace};
use super::vocab::{Binding, Vocab, DO_ACTION};
use super::LearnerError;
use crate::comms::{CostLedger, Feedback, Teacher, TeachingContext, Trajectory};
use crate::craftworld::{PrimitiveAction, WorldState};
use crate::taskgraph::{IntentionId, TaskGraph, TaskIdx, ValidSet};
use crate::util::{combine, rng_from};

const CHECKPOINT_VERSION: u32 = 1;

/// One turn of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub t: usize,
    pub state: WorldState,
    /// Stack contents before the turn, bottom first.
    pub stack: Vec<TaskIdx>,
    pub intention: IntentionId,
    pub action: IntentionId,
    pub valid: ValidSet,
    pub execution: Option<Trajectory>,
    pub feedback: Feedback,
    pub cost_micro: u64,
    pub next_state: WorldState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub main: TaskIdx,
    pub steps: Vec<TraceStep>,
    /// Declared main task followed by every task named verbally.
    pub uttered: Vec<TaskIdx>,
    /// Stopped by the turn cap with intentions left on the stack.
    pub truncated: bool,
    pub success: bool,
    pub final_state: WorldState,
    pub cost_micro: u64,
}

impl EpisodeTrace {
    pub fn requests(&self) -> u64 {
        self.steps.len() as u64
    }

    /// Sum of rewards, i.e. the negated episode cost.
    pub fn total_reward_micro(&self) -> i64 {
        -(self.steps.iter().map(|s| s.cost_micro as i64).sum::<i64>())
    }
}

/// Result of running the learner without a teacher.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rollout {
    pub success: bool,
    pub final_state: WorldState,
    pub uttered: Vec<TaskIdx>,
    pub macro_steps: usize,
}

/// Optional override of intention choices, called with
/// `(turn, stack, state, head values)` and returning an intention-head action.
pub type IntentionChooser<'a> = dyn FnMut(usize, &StackMemory, &WorldState, &[f64]) -> usize + 'a;

/// The hierarchical learner: value function, memory discipline, replay and updates.
#[derive(Debug, Clone)]
pub struct Learner {
    hyper: Hyperparams,
    q: QFunction,
    vocab: Vocab,
    binding: Binding,
    replay: ReplayBuffer,
    rng: ChaCha8Rng,
    no_jcom: bool,
    /// Transitions added since the last [`Learner::train`].
    fresh: usize,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    hyper: Hyperparams,
    vocab: Vocab,
    no_jcom: bool,
    rng: ChaCha8Rng,
    q: QSnapshot,
}

impl Learner {
    pub fn new(hyper: Hyperparams, config: QConfig, graph: &TaskGraph, seed: u64) -> Self {
        let mut vocab = Vocab::default();
        vocab.extend_with(graph);
        let binding = vocab.bind(graph);
        Self {
            replay: ReplayBuffer::new(hyper.buffer_capacity),
            hyper,
            q: QFunction::new(config),
            vocab,
            binding,
            rng: rng_from(seed),
            no_jcom: false,
            fresh: 0,
        }
    }

    /// Disables the next-episode communication term (temporal-difference updates).
    pub fn with_no_jcom(mut self, no_jcom: bool) -> Self {
        self.no_jcom = no_jcom;
        self
    }

    pub fn no_jcom(&self) -> bool {
        self.no_jcom
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn q(&self) -> &QFunction {
        &self.q
    }

    pub fn q_mut(&mut self) -> &mut QFunction {
        &mut self.q
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn binding(&self) -> &Binding {
        &self.binding
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn learning_rate(&self) -> f64 {
        self.hyper.learning_rate(self.q.config().backend)
    }

    /// Switches to `graph`, appending its unseen task ids to the vocabulary.
    /// Returns the number of new intentions.
    pub fn attach_graph(&mut self, graph: &TaskGraph) -> usize {
        let added = self.vocab.extend_with(graph);
        self.binding = self.vocab.bind(graph);
        added
    }

    pub fn intention_values(&self, view: &StateView, task: TaskIdx) -> Vec<f64> {
        self.q.values(Head::Intention, &view.features, self.binding.task_hash(task), self.binding.action_count())
    }

    pub fn primitive_values(&self, view: &StateView, task: TaskIdx) -> Vec<f64> {
        self.q.values(Head::Primitive, &view.features, self.binding.task_hash(task), PRIMITIVE_COUNT)
    }

    /// ε-greedy intention choice (an intention-head action index).
    pub fn select_action(&mut self, view: &StateView, task: TaskIdx, epsilon: f64) -> usize {
        let values = self.intention_values(view, task);
        epsilon_greedy(&values, self.binding.available(), epsilon, &mut self.rng)
    }

    /// Rolls out the primitive head for `task` until `Terminate` or the step cap.
    /// Returns the trajectory and the views of its visited states.
    pub fn execute_intention(
        &self,
        env: &Env,
        start: &WorldState,
        task: TaskIdx,
        epsilon: f64,
        rng: &mut impl Rng,
    ) -> (Trajectory, Vec<Arc<StateView>>) {
        let mut state = *start;
        let mut steps = Vec::new();
        let mut views = Vec::new();
        let origin = env.view(start);
        for _ in 0..self.hyper.max_execution_steps {
            let view = env.execution_view(&state, &origin.features);
            let values = self.primitive_values(&view, task);
            let a = PrimitiveAction::ALL[epsilon_greedy(&values, &[true; PRIMITIVE_COUNT], epsilon, rng)];
            steps.push((state, a));
            views.push(view);
            state = env.world().step(&state, a);
            if a == PrimitiveAction::Terminate {
                return (Trajectory { steps, end: state, capped: false }, views);
            }
        }
        (Trajectory { steps, end: state, capped: true }, views)
    }

    pub fn push_transition(&mut self, t: Transition) {
        self.replay.push(t);
        self.fresh += 1;
    }

    /// Score-weighted imitation of an execution's primitive actions.
    pub fn self_imitate(
        &mut self,
        task: TaskIdx,
        trajectory: &Trajectory,
        views: &[Arc<StateView>],
        score: f64,
    ) -> f64 {
        let mut steps: Vec<_> = views.iter().zip(trajectory.actions()).map(|(v, a)| (&v.features, a.index())).collect();
        if self.hyper.loop_erased_imitation && score != 0.0 {
            let keys: Vec<u64> = views.iter().map(|v| combine(v.features.exact, v.features.progress)).collect();
            steps = loop_erased(&keys[..steps.len()]).into_iter().map(|k| steps[k]).collect();
        }
        let lr = self.learning_rate();
        update_self_imitation(&mut self.q, &steps, self.binding.task_hash(task), score, self.hyper.margin, lr)
    }

    /// Self-imitates under `frame.task` the primitive path from the frame's
    /// baseline to `end`, closed by `Terminate`.
    pub fn imitate_composed(
        &mut self,
        env: &Env,
        frame: &Frame,
        steps: &[(WorldState, PrimitiveAction)],
        end: &WorldState,
    ) {
        if steps.is_empty() {
            return;
        }
        let origin = env.view(&frame.baseline);
        let mut steps = steps.to_vec();
        steps.push((*end, PrimitiveAction::Terminate));
        let views: Vec<_> = steps.iter().map(|(s, _)| env.execution_view(s, &origin.features)).collect();
        let trajectory = Trajectory { end: env.world().step(end, PrimitiveAction::Terminate), steps, capped: false };
        self.self_imitate(frame.task, &trajectory, &views, 1.0);
    }

    /// Replay updates after an episode: temporal-difference (unless disabled)
    /// and max-margin on the same batches.
    pub fn train(&mut self) {
        if self.replay.is_empty() {
            return;
        }
        let lr = self.learning_rate();
        let batches = self.hyper.updates_per_episode.max(self.fresh.div_ceil(self.hyper.batch_size));
        self.fresh = 0;
        for _ in 0..batches {
            let idx: Vec<usize> =
                (0..self.hyper.batch_size).map(|_| self.rng.gen_range(0..self.replay.len())).collect();
            let batch: Vec<Transition> = idx.iter().map(|&i| self.replay.get(i).clone()).collect();
            let refs: Vec<&Transition> = batch.iter().collect();
            let binding = self.binding.clone();
            let space = ActionSpace { intentions: binding.available() };
            if !self.no_jcom {
                update_rl(&mut self.q, &refs, self.hyper.gamma, lr, &space);
            }
            update_margin(&mut self.q, &refs, self.hyper.margin, lr, &space);
        }
    }

    /// One teacher-in-the-loop episode. Feedback is charged to `ledger`,
    /// transitions go to the replay buffer and executions are self-imitated.
    pub fn run_episode(
        &mut self,
        env: &mut Env,
        teacher: &mut dyn Teacher,
        main: TaskIdx,
        start: WorldState,
        epsilon: f64,
        ledger: &mut CostLedger,
    ) -> Result<EpisodeTrace, LearnerError> {
        self.run_episode_with(env, teacher, main, start, epsilon, ledger, None)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn run_episode_with(
        &mut self,
        env: &mut Env,
        teacher: &mut dyn Teacher,
        main: TaskIdx,
        start: WorldState,
        epsilon: f64,
        ledger: &mut CostLedger,
        mut chooser: Option<&mut IntentionChooser<'_>>,
    ) -> Result<EpisodeTrace, LearnerError> {
        let mut stack = StackMemory::new(main, start);
        let mut state = start;
        let mut view = env.view(&state);
        let mut steps = Vec::new();
        let mut uttered = vec![main];
        let mut cost_micro = 0;
        // Primitive steps taken while each stack frame was live.
        let mut pending: Vec<Vec<(WorldState, PrimitiveAction)>> = vec![Vec::new()];
        for t in 0..self.hyper.max_macro_steps {
            let frame = *stack.top_frame().expect("loop runs while the stack is non-empty");
            let current = IntentionId::Task(frame.task);
            let valid = env.valid_set(&state, current, &frame.baseline);
            let values = self.intention_values(&view, frame.task);
            let action = match chooser.as_mut() {
                Some(choose) => choose(t, &stack, &state, &values),
                None => epsilon_greedy(&values, self.binding.available(), epsilon, &mut self.rng),
            };
            let u = self
                .binding
                .intention_of(action)
                .ok_or_else(|| LearnerError::Protocol(format!("action {action} names no intention")))?;
            let before = stack.tasks();
            let intention_hash = self.binding.task_hash(frame.task);
            let (feedback, execution, next_view) = if u == IntentionId::Do {
                let mut rng = std::mem::replace(&mut self.rng, rng_from(0));
                let (traj, views) = self.execute_intention(env, &state, frame.task, epsilon, &mut rng);
                self.rng = rng;
                let ctx = TeachingContext {
                    graph: env.graph(),
                    levels: env.levels(),
                    world: env.world(),
                    state: &state,
                    current,
                    valid: &valid,
                };
                let feedback = teacher.evaluate(&ctx, &traj)?;
                let score = feedback.score().unwrap_or(0.0);
                self.self_imitate(frame.task, &traj, &views, score);
                stack.query(IntentionId::Done, &traj.end)?;
                pending.truncate(stack.len());
                for steps in &mut pending {
                    steps.extend(traj.steps.iter().filter(|(_, a)| *a != PrimitiveAction::Terminate));
                }
                let next_view = env.view(&traj.end);
                (feedback, Some(traj), next_view)
            } else {
                let ctx = TeachingContext {
                    graph: env.graph(),
                    levels: env.levels(),
                    world: env.world(),
                    state: &state,
                    current,
                    valid: &valid,
                };
                let feedback = teacher.instruct(&ctx, u)?;
                if let IntentionId::Task(task) = u {
                    uttered.push(task);
                }
                let confirmed = matches!(feedback, Feedback::Instructive { was_learner_correct: true, .. });
                if u == IntentionId::Done && confirmed && self.hyper.composed_imitation {
                    let steps = pending.last().map(Vec::as_slice).unwrap_or_default();
                    self.imitate_composed(env, &frame, steps, &state);
                }
                stack.query(u, &state)?;
                pending.resize_with(stack.len(), Vec::new);
                (feedback, None, view.clone())
            };
            let cost = ledger.charge(&feedback);
            cost_micro += cost;
            let next_state = next_view.state;
            self.push_transition(Transition {
                head: Head::Intention,
                state: view.clone(),
                intention: intention_hash,
                action,
                reward: -(cost as f64) / 1e6,
                next_state: next_view.clone(),
                next_intention: stack.top_frame().map(|f| self.binding.task_hash(f.task)),
                terminal: stack.is_empty(),
                label: feedback.correct_label().map(|c| self.binding.action_of(c)),
                score: feedback.score(),
            });
            steps.push(TraceStep {
                t,
                state,
                stack: before,
                intention: current,
                action: u,
                valid,
                execution,
                feedback,
                cost_micro: cost,
                next_state,
            });
            state = next_state;
            view = next_view;
            if stack.is_empty() {
                break;
            }
        }
        Ok(EpisodeTrace {
            main,
            truncated: !stack.is_empty(),
            success: env.graph().is_satisfied(&start, &state, main),
            final_state: state,
            steps,
            uttered,
            cost_micro,
        })
    }

    /// Teacher-free greedy run: declare `main`, then follow the learned policy.
    pub fn rollout(&self, env: &Env, main: TaskIdx, start: WorldState) -> Rollout {
        self.rollout_with(env, main, start, &|_| false)
    }

    /// Like [`Self::rollout`], but executes directly whenever `execute(task)` holds.
    pub fn rollout_with(
        &self,
        env: &Env,
        main: TaskIdx,
        start: WorldState,
        execute: &dyn Fn(TaskIdx) -> bool,
    ) -> Rollout {
        let mut stack = StackMemory::new(main, start);
        let mut state = start;
        let mut uttered = vec![main];
        let mut rng = rng_from(0);
        let mut macro_steps = 0;
        while let Some(frame) = stack.top_frame().copied() {
            if macro_steps == self.hyper.max_macro_steps {
                break;
            }
            macro_steps += 1;
            let action = if execute(frame.task) {
                DO_ACTION
            } else {
                let view = env.view(&state);
                greedy(&self.intention_values(&view, frame.task), self.binding.available())
            };
            match self.binding.intention_of(action) {
                Some(IntentionId::Do) | None => {
                    let (traj, _) = self.execute_intention(env, &state, frame.task, 0.0, &mut rng);
                    state = traj.end;
                    stack.query(IntentionId::Done, &state).expect("non-empty");
                }
                Some(u) => {
                    if let IntentionId::Task(t) = u {
                        uttered.push(t);
                    }
                    stack.query(u, &state).expect("task or done");
                }
            }
        }
        Rollout { success: env.graph().is_satisfied(&start, &state, main), final_state: state, uttered, macro_steps }
    }

    /// Runs the primitive head of `task` directly, without the intention head.
    pub fn flat_rollout(&self, env: &Env, task: TaskIdx, start: WorldState) -> Rollout {
        let (traj, _) = self.execute_intention(env, &start, task, 0.0, &mut rng_from(0));
        Rollout {
            success: env.graph().is_satisfied(&start, &traj.end, task),
            final_state: traj.end,
            uttered: vec![task],
            macro_steps: 1,
        }
    }

    pub fn to_json(&self) -> Result<String, LearnerError> {
        let cp = Checkpoint {
            version: CHECKPOINT_VERSION,
            hyper: self.hyper,
            vocab: self.vocab.clone(),
            no_jcom: self.no_jcom,
            rng: self.rng.clone(),
            q: self.q.snapshot(),
        };
        serde_json::to_string(&cp).map_err(|e| LearnerError::Checkpoint(e.to_string()))
    }

    /// Restores a learner and binds it to `graph`, which must contain every
    /// task the learner knows or extend them.
    pub fn from_json(text: &str, graph: &TaskGraph) -> Result<Self, LearnerError> {
        let cp: Checkpoint = serde_json::from_str(text).map_err(|e| LearnerError::Checkpoint(e.to_string()))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(LearnerError::Checkpoint(format!("unsupported checkpoint version {}", cp.version)));
        }
        let mut vocab = cp.vocab;
        if !graph.contains_all_ids(vocab.ids().iter().map(String::as_str)) {
            let missing: Vec<&str> =
                vocab.ids().iter().filter(|id| graph.index_of(id).is_err()).map(String::as_str).collect();
            return Err(LearnerError::GraphMismatch(missing.join(", ")));
        }
        vocab.extend_with(graph);
        let binding = vocab.bind(graph);
        Ok(Self {
            replay: ReplayBuffer::new(cp.hyper.buffer_capacity),
            hyper: cp.hyper,
            q: QFunction::from_snapshot(cp.q),
            vocab,
            binding,
            rng: cp.rng,
            no_jcom: cp.no_jcom,
            fresh: 0,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), LearnerError> {
        std::fs::write(path, self.to_json()?).map_err(|e| LearnerError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path, graph: &TaskGraph) -> Result<Self, LearnerError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| LearnerError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, graph)
    }

    /// Replaces the hyperparameters (e.g. for an adaptation phase).
    pub fn set_hyper(&mut self, hyper: Hyperparams) {
        if hyper.buffer_capacity != self.hyper.buffer_capacity {
            self.replay = ReplayBuffer::new(hyper.buffer_capacity);
        }
        self.hyper = hyper;
    }

    /// Whether the intention head currently prefers to execute `task` directly.
    pub fn prefers_do(&self, view: &StateView, task: TaskIdx) -> bool {
        greedy(&self.intention_values(view, task), self.binding.available()) == DO_ACTION
    }
}
