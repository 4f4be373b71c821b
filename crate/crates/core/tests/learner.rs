use std::path::Path;

use ceil_core::baselines::Method;
use ceil_core::comms::{CostLedger, Feedback, FeedbackKind, SimulatedTeacher, TeacherVariant};
use ceil_core::craftworld::{PrimitiveAction, WorldState};
use ceil_core::harness::{train_layout_seed, ExperimentConfig, Scenario, Setting};
use ceil_core::learner::{Env, Frame, Head, Hyperparams, Learner, StackMemory, DONE_ACTION, DO_ACTION};
use ceil_core::taskgraph::{IntentionId, TaskIdx};
use ceil_core::util::rng_from;

fn config() -> ExperimentConfig {
    ExperimentConfig::desk(Method::Ceil, TeacherVariant::PerformanceBased)
}

fn scenario() -> Scenario {
    Scenario::new(&config(), Path::new(".")).unwrap()
}

fn learner(s: &Scenario, hyper: Hyperparams, seed: u64) -> Learner {
    Learner::new(hyper, s.config.model, &s.graph, seed)
}

fn layout(s: &Scenario, k: u64) -> (Env, WorldState) {
    s.env(train_layout_seed(0, Setting::Scratch, k)).unwrap()
}

fn teacher() -> SimulatedTeacher {
    SimulatedTeacher::new(TeacherVariant::PerformanceBased, 3, 0.1)
}

#[test]
fn episodes_follow_the_stack_discipline() {
    let s = scenario();
    let mut l = learner(&s, s.config.hyper, 1);
    let mut t = teacher();
    for k in 0..40 {
        let (mut env, start) = layout(&s, k);
        let mut ledger = CostLedger::new(&s.config.costs);
        let before = l.replay().len();
        let trace = l.run_episode(&mut env, &mut t, s.main, start, 1.0, &mut ledger).unwrap();
        let mut depth = 1usize;
        for step in &trace.steps {
            assert_eq!(step.stack.len(), depth);
            match step.action {
                IntentionId::Do => {
                    let exec = step.execution.as_ref().expect("DO carries its execution");
                    assert_eq!(exec.start(), &step.state);
                    assert_eq!(exec.end, step.next_state);
                    assert!(matches!(step.feedback, Feedback::Evaluative { .. }));
                    depth -= 1;
                }
                IntentionId::Done => {
                    assert_eq!(step.state, step.next_state);
                    assert!(matches!(step.feedback, Feedback::Instructive { .. }));
                    depth -= 1;
                }
                IntentionId::Task(_) => {
                    assert_eq!(step.state, step.next_state);
                    assert!(matches!(step.feedback, Feedback::Instructive { .. }));
                    depth += 1;
                }
            }
        }
        assert_eq!(depth == 0, !trace.truncated);
        assert_eq!(trace.cost_micro, ledger.total_micro());
        assert_eq!(trace.requests(), ledger.request_count());
        assert_eq!(trace.total_reward_micro(), -(ledger.total_micro() as i64));
        // Every turn is stored once with reward −cost.
        let rewards: f64 = (before..l.replay().len()).map(|i| l.replay().get(i).reward).sum();
        assert_eq!(l.replay().len() - before, trace.steps.len());
        assert!((rewards + ledger.total()).abs() < 1e-9);
    }
}

#[test]
fn executing_first_is_one_evaluation() {
    let s = scenario();
    let mut l = learner(&s, s.config.hyper, 2);
    let (mut env, start) = layout(&s, 0);
    let mut ledger = CostLedger::new(&s.config.costs);
    let mut choose = |_: usize, _: &StackMemory, _: &WorldState, _: &[f64]| DO_ACTION;
    let trace =
        l.run_episode_with(&mut env, &mut teacher(), s.main, start, 0.0, &mut ledger, Some(&mut choose)).unwrap();
    assert_eq!(trace.steps.len(), 1);
    assert_eq!(ledger.count(FeedbackKind::Evaluative), 1);
    assert_eq!(ledger.total_decimal(), "0.200000");
    assert!(!trace.truncated);
}

#[test]
fn declaring_done_first_is_one_correction() {
    let s = scenario();
    let mut l = learner(&s, s.config.hyper, 3);
    let (mut env, start) = layout(&s, 0);
    let mut ledger = CostLedger::new(&s.config.costs);
    let mut choose = |_: usize, _: &StackMemory, _: &WorldState, _: &[f64]| DONE_ACTION;
    let trace =
        l.run_episode_with(&mut env, &mut teacher(), s.main, start, 0.0, &mut ledger, Some(&mut choose)).unwrap();
    assert_eq!(trace.steps.len(), 1);
    assert_eq!(ledger.request_count(), 1);
    // The main task is not done yet, so the claim is corrected.
    assert_eq!(ledger.count(FeedbackKind::IncorrectInstructive), 1);
    assert_eq!(ledger.total_decimal(), "0.050000");
    assert!(!trace.success);
}

#[test]
fn scripted_valid_choices_are_always_confirmed() {
    let s = scenario();
    let mut l = learner(&s, s.config.hyper, 4);
    let (mut env, start) = layout(&s, 1);
    let mut oracle = env.clone();
    let binding = l.binding().clone();
    let mut ledger = CostLedger::new(&s.config.costs);
    // Name the most abstract valid subtask, execute when only DO remains.
    let levels = s.levels.clone();
    let mut choose = |_: usize, stack: &StackMemory, state: &WorldState, _: &[f64]| {
        let frame = stack.top_frame().unwrap();
        let valid = oracle.valid_set(state, IntentionId::Task(frame.task), &frame.baseline);
        let pick = valid
            .iter()
            .filter_map(|v| v.task())
            .max_by_key(|&t| levels.level(t))
            .map(IntentionId::Task)
            .unwrap_or(if valid.contains(&IntentionId::Done) { IntentionId::Done } else { IntentionId::Do });
        binding.action_of(pick)
    };
    let trace =
        l.run_episode_with(&mut env, &mut teacher(), s.main, start, 0.0, &mut ledger, Some(&mut choose)).unwrap();
    assert!(trace.steps.len() > 2);
    for step in &trace.steps {
        match (&step.action, &step.feedback) {
            (IntentionId::Do, Feedback::Evaluative { .. }) => assert!(step.valid.contains(&IntentionId::Do)),
            (u, Feedback::Instructive { correct, was_learner_correct }) => {
                assert!(step.valid.contains(u), "{u:?} not in {:?}", step.valid);
                assert!(was_learner_correct);
                assert_eq!(correct, u);
            }
            other => panic!("unexpected turn {other:?}"),
        }
    }
    assert_eq!(ledger.count(FeedbackKind::IncorrectInstructive), 0);
}

#[test]
fn training_is_reproducible() {
    let s = scenario();
    let run = || {
        let mut l = learner(&s, s.config.hyper, 5);
        let mut t = teacher();
        let mut ledger = CostLedger::new(&s.config.costs);
        let mut traces = Vec::new();
        for k in 0..30 {
            let (mut env, start) = layout(&s, k);
            traces.push(l.run_episode(&mut env, &mut t, s.main, start, 0.5, &mut ledger).unwrap());
            l.train();
        }
        (traces, l.to_json().unwrap(), ledger)
    };
    assert_eq!(run(), run());
}

#[test]
fn checkpoints_round_trip() {
    let s = scenario();
    let mut l = learner(&s, s.config.hyper, 6);
    let mut t = teacher();
    let mut ledger = CostLedger::new(&s.config.costs);
    for k in 0..20 {
        let (mut env, start) = layout(&s, k);
        l.run_episode(&mut env, &mut t, s.main, start, 0.8, &mut ledger).unwrap();
        l.train();
    }
    let json = l.to_json().unwrap();
    let back = Learner::from_json(&json, &s.graph).unwrap();
    assert_eq!(back.q(), l.q());
    assert_eq!(back.hyper(), l.hyper());
    assert_eq!(back.to_json().unwrap(), json);
    let (env, start) = s.env(0).unwrap();
    assert_eq!(back.rollout(&env, s.main, start), l.rollout(&env, s.main, start));
    assert!(Learner::from_json("{\"version\": 99}", &s.graph).is_err());
}

#[test]
fn execution_length_is_capped() {
    let s = scenario();
    let hyper = Hyperparams { max_execution_steps: 1, ..s.config.hyper };
    let l = learner(&s, hyper, 7);
    let (env, start) = layout(&s, 0);
    let mut rng = rng_from(1);
    for _ in 0..50 {
        let (traj, views) = l.execute_intention(&env, &start, s.main, 1.0, &mut rng);
        assert_eq!(traj.len(), 1);
        assert_eq!(views.len(), 1);
        let terminated = traj.steps[0].1 == PrimitiveAction::Terminate;
        assert_eq!(traj.capped, !terminated);
    }
}

#[test]
fn terminate_ends_an_execution_in_place() {
    let s = scenario();
    let mut l = learner(&s, s.config.hyper, 8);
    let (env, start) = layout(&s, 0);
    let view = env.execution_view(&start, &env.view(&start).features);
    let intention = l.binding().task_hash(s.main);
    l.q_mut().nudge(Head::Primitive, &view.features, intention, PrimitiveAction::Terminate.index(), 1.0);
    let (traj, _) = l.execute_intention(&env, &start, s.main, 0.0, &mut rng_from(0));
    assert_eq!(traj.len(), 1);
    assert!(!traj.capped);
    assert!(traj.end.same_configuration(&start));
    assert!(!l.flat_rollout(&env, s.main, start).success);
}

/// Self-imitation of successful random executions of a leaf task until the
/// greedy policy is reliable.
fn train_leaf(s: &Scenario, task: TaskIdx, episodes: u64) -> Learner {
    let mut l = learner(s, s.config.hyper, 9);
    let mut rng = rng_from(9);
    for k in 0..episodes {
        let (env, start) = layout(s, k);
        let eps = (1.0 - k as f64 / (0.3 * episodes as f64)).max(0.05);
        let (traj, views) = l.execute_intention(&env, &start, task, eps, &mut rng);
        let score = if s.graph.is_satisfied(&start, &traj.end, task) { 1.0 } else { 0.0 };
        l.self_imitate(task, &traj, &views, score);
    }
    l
}

#[test]
fn converged_leaf_policy_is_optimal() {
    let s = scenario();
    let wood = s.graph.index_of("GetWood").unwrap();
    let l = train_leaf(&s, wood, 4000);
    for seed in 0..20 {
        let (mut env, start) = s.env(seed).unwrap();
        let plan = env.planner().plan(&s.graph, &start, wood, &start).unwrap();
        let (traj, _) = l.execute_intention(&env, &start, wood, 0.0, &mut rng_from(0));
        assert!(s.graph.is_satisfied(&start, &traj.end, wood), "layout {seed}");
        // A shortest plan followed by Terminate.
        assert_eq!(traj.len(), plan.len() + 1, "layout {seed}");
        assert_eq!(traj.steps.last().unwrap().1, PrimitiveAction::Terminate);
    }
}

#[test]
fn composed_paths_are_imitated_under_the_confirmed_task() {
    let s = scenario();
    let pork = s.graph.index_of("BakePork").unwrap();
    for k in 0..5 {
        let mut l = learner(&s, s.config.hyper, 10);
        let (mut env, start) = layout(&s, k);
        let plan = env.planner().plan(&s.graph, &start, pork, &start).unwrap();
        let mut steps = Vec::new();
        let mut state = start;
        for a in plan {
            steps.push((state, a));
            state = env.world().step(&state, a);
        }
        let frame = Frame { task: pork, baseline: start };
        for _ in 0..20 {
            l.imitate_composed(&env, &frame, &steps, &state);
        }
        let (traj, _) = l.execute_intention(&env, &start, pork, 0.0, &mut rng_from(0));
        assert_eq!(traj.len(), steps.len() + 1, "layout {k}");
        assert!(s.graph.is_satisfied(&start, &traj.end, pork));
    }
}
