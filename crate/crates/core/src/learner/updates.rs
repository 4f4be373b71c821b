use super::features::Features;
use super::qfunction::{greedy, BackendKind, Head, QFunction, PRIMITIVE_COUNT};
use super::replay::Transition;
use crate::util::FastMap;

/// Action sets used when maximizing over a head.
#[derive(Debug, Clone, Copy)]
pub struct ActionSpace<'a> {
    /// Availability mask of the intention head.
    pub intentions: &'a [bool],
}

impl ActionSpace<'_> {
    pub fn size(&self, head: Head) -> usize {
        match head {
            Head::Intention => self.intentions.len(),
            Head::Primitive => PRIMITIVE_COUNT,
        }
    }

    pub fn mask(&self, head: Head) -> &[bool] {
        match head {
            Head::Intention => self.intentions,
            Head::Primitive => &[true; PRIMITIVE_COUNT],
        }
    }
}

fn step_scale(q: &QFunction, lr: f64, batch_len: usize) -> f64 {
    match q.config().backend {
        BackendKind::Tabular => lr,
        BackendKind::Linear => lr / batch_len as f64,
    }
}

fn max_value(q: &QFunction, head: Head, f: &Features, intention: u64, space: &ActionSpace<'_>) -> f64 {
    let values = q.values(head, f, intention, space.size(head));
    values[greedy(&values, space.mask(head))]
}

/// One temporal-difference step on `batch`; returns the mean squared TD error
/// before the step. Targets use the parameters from before the step.
pub fn update_rl(q: &mut QFunction, batch: &[&Transition], gamma: f64, lr: f64, space: &ActionSpace<'_>) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let deltas: Vec<f64> = batch
        .iter()
        .map(|t| {
            let bootstrap = match (t.terminal, t.next_intention) {
                (false, Some(next)) => gamma * max_value(q, t.head, &t.next_state.features, next, space),
                _ => 0.0,
            };
            t.reward + bootstrap - q.value(t.head, &t.state.features, t.intention, t.action)
        })
        .collect();
    let scale = step_scale(q, lr, batch.len());
    for (t, d) in batch.iter().zip(&deltas) {
        q.nudge(t.head, &t.state.features, t.intention, t.action, scale * d);
    }
    deltas.iter().map(|d| d * d).sum::<f64>() / batch.len() as f64
}

/// Hinge loss `max(0, λ + max_{u ∉ {excluded, u*}} Q(u) − Q(u*))` and its best competitor.
pub fn hinge(
    values: &[f64],
    mask: &[bool],
    label: usize,
    excluded: Option<usize>,
    margin: f64,
) -> (f64, Option<usize>) {
    let mut best: Option<usize> = None;
    for (a, &v) in values.iter().enumerate() {
        if a == label || Some(a) == excluded || !mask.get(a).copied().unwrap_or(true) {
            continue;
        }
        if best.is_none_or(|b| v > values[b]) {
            best = Some(a);
        }
    }
    match best {
        Some(c) => ((margin + values[c] - values[label]).max(0.0), Some(c)),
        None => (0.0, None),
    }
}

fn excluded_for(head: Head) -> Option<usize> {
    match head {
        Head::Intention => Some(super::vocab::DO_ACTION),
        Head::Primitive => None,
    }
}

/// One max-margin step over the labelled members of `batch`; returns the mean
/// hinge loss before the step.
pub fn update_margin(q: &mut QFunction, batch: &[&Transition], margin: f64, lr: f64, space: &ActionSpace<'_>) -> f64 {
    let labelled: Vec<&Transition> = batch.iter().copied().filter(|t| t.label.is_some()).collect();
    if labelled.is_empty() {
        return 0.0;
    }
    let steps: Vec<(f64, Option<usize>)> = labelled
        .iter()
        .map(|t| {
            let values = q.values(t.head, &t.state.features, t.intention, space.size(t.head));
            hinge(&values, space.mask(t.head), t.label.expect("filtered"), excluded_for(t.head), margin)
        })
        .collect();
    let scale = step_scale(q, lr, labelled.len());
    for (t, (loss, competitor)) in labelled.iter().zip(&steps) {
        if *loss > 0.0 {
            let label = t.label.expect("filtered");
            q.nudge(t.head, &t.state.features, t.intention, label, scale);
            if let Some(c) = competitor {
                q.nudge(t.head, &t.state.features, t.intention, *c, -scale);
            }
        }
    }
    steps.iter().map(|(l, _)| l).sum::<f64>() / labelled.len() as f64
}

/// Score-weighted hinge imitation of the primitive actions taken in one
/// execution; a zero score leaves `q` untouched. Returns the weighted mean loss.
pub fn update_self_imitation(
    q: &mut QFunction,
    steps: &[(&Features, usize)],
    intention: u64,
    score: f64,
    margin: f64,
    lr: f64,
) -> f64 {
    if score == 0.0 || steps.is_empty() {
        return 0.0;
    }
    let scale = step_scale(q, lr, steps.len()) * score;
    let mut total = 0.0;
    for (f, action) in steps {
        let values = q.values(Head::Primitive, f, intention, PRIMITIVE_COUNT);
        let (loss, competitor) = hinge(&values, &[true; PRIMITIVE_COUNT], *action, None, margin);
        total += loss;
        if loss > 0.0 {
            q.nudge(Head::Primitive, f, intention, *action, scale);
            if let Some(c) = competitor {
                q.nudge(Head::Primitive, f, intention, c, -scale);
            }
        }
    }
    score * total / steps.len() as f64
}

/// Indices of the loop-erased path through `keys`: whenever a key recurs, the
/// steps since its earlier visit are dropped, so each kept key is unique and
/// carries its last visit.
pub fn loop_erased(keys: &[u64]) -> Vec<usize> {
    let mut path: Vec<usize> = Vec::with_capacity(keys.len());
    let mut position: FastMap<u64, usize> = FastMap::default();
    for (k, key) in keys.iter().enumerate() {
        if let Some(&p) = position.get(key) {
            for &dropped in &path[p..] {
                position.remove(&keys[dropped]);
            }
            path.truncate(p);
        }
        position.insert(*key, path.len());
        path.push(k);
    }
    path
}

/// Supervised hinge step on expert-labelled primitive states, used by the
/// imitation baselines.
pub fn update_primitive_labels(
    q: &mut QFunction,
    steps: &[(&Features, usize)],
    intention: u64,
    margin: f64,
    lr: f64,
) -> f64 {
    update_self_imitation(q, steps, intention, 1.0, margin, lr)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::craftworld::{Cell, Inventory, Observation, WorldState};
    use crate::learner::features::{FeatureMode, StateView};
    use crate::learner::qfunction::QConfig;

    fn view(id: u64) -> Arc<StateView> {
        Arc::new(StateView {
            state: WorldState {
                agent: Cell::new(id as i32, 0),
                inventory: Inventory::default(),
                alive: 0,
                step_count: 0,
            },
            obs: Observation { height: 0, width: 0, channels: 0, data: Vec::new() },
            features: Features {
                exact: id,
                inventory: id,
                held: Vec::new(),
                progress: crate::learner::features::NO_PROGRESS,
                relations: Vec::new(),
                dense: Vec::new(),
            },
        })
    }

    fn exact_q() -> QFunction {
        QFunction::new(QConfig { features: FeatureMode::Exact, ..QConfig::default() })
    }

    fn tr(s: u64, a: usize, r: f64, next: u64, terminal: bool, label: Option<usize>) -> Transition {
        Transition {
            head: Head::Intention,
            state: view(s),
            intention: 1,
            action: a,
            reward: r,
            next_state: view(next),
            next_intention: if terminal { None } else { Some(1) },
            terminal,
            label,
            score: None,
        }
    }

    const MASK: [bool; 4] = [true; 4];

    fn space() -> ActionSpace<'static> {
        ActionSpace { intentions: &MASK }
    }

    #[test]
    fn single_terminal_update_hits_the_reward() {
        let mut q = exact_q();
        let t = tr(0, 2, -0.01, 0, true, None);
        update_rl(&mut q, &[&t], 0.9, 1.0, &space());
        assert_eq!(q.value(Head::Intention, &t.state.features, 1, 2), -0.01);
        // Zero residual leaves the parameters unchanged.
        let before = q.clone();
        update_rl(&mut q, &[&t], 0.9, 1.0, &space());
        assert_eq!(q, before);
    }

    #[test]
    fn two_state_chain_converges_to_the_bellman_value() {
        let mut q = exact_q();
        // s0 --a0 (-0.01)--> s1 --a0 (-0.2)--> end; all other actions are terminal at -1.
        let mut ts = vec![tr(0, 0, -0.01, 1, false, None), tr(1, 0, -0.2, 1, true, None)];
        for s in 0..2 {
            for a in 1..4 {
                ts.push(tr(s, a, -1.0, 0, true, None));
            }
        }
        for _ in 0..2000 {
            let batch: Vec<&Transition> = ts.iter().collect();
            update_rl(&mut q, &batch, 0.9, 0.2, &space());
        }
        let v = q.value(Head::Intention, &view(0).features, 1, 0);
        assert!((v - (-0.01 + 0.9 * -0.2)).abs() < 1e-6, "{v}");
    }

    #[test]
    fn hinge_arithmetic() {
        let mask = [true; 3];
        // u* = 2 with value 2.0, competitor 0.5
        assert_eq!(hinge(&[9.0, 0.5, 2.0], &mask, 2, Some(0), 1.0).0, 0.0);
        let (loss, c) = hinge(&[9.0, 1.0, 0.5], &mask, 2, Some(0), 1.0);
        assert_eq!((loss, c), (1.5, Some(1)));
    }

    #[test]
    fn margin_converges_to_zero_loss_with_correct_argmax() {
        let mut q = exact_q();
        let batch_data = vec![
            tr(0, 3, -0.05, 0, false, Some(2)),
            tr(1, 1, -0.05, 0, false, Some(3)),
            tr(2, 2, -0.01, 0, false, Some(1)),
        ];
        let batch: Vec<&Transition> = batch_data.iter().collect();
        let mut loss = f64::MAX;
        for _ in 0..100 {
            loss = update_margin(&mut q, &batch, 1.0, 0.1, &space());
            if loss == 0.0 {
                break;
            }
        }
        assert_eq!(loss, 0.0);
        for t in &batch_data {
            let mut values = q.values(Head::Intention, &t.state.features, 1, 4);
            values[0] = f64::NEG_INFINITY;
            assert_eq!(greedy(&values, &MASK), t.label.unwrap());
        }
    }

    #[test]
    fn do_is_excluded_from_competitors() {
        let mut q = exact_q();
        let t = tr(0, 0, -0.05, 0, false, Some(2));
        q.nudge(Head::Intention, &t.state.features, 1, 0, 5.0);
        q.nudge(Head::Intention, &t.state.features, 1, 2, 1.5);
        // Best non-DO competitor is 0.0, so the margin of 1 is already met.
        assert_eq!(update_margin(&mut q, &[&t], 1.0, 0.1, &space()), 0.0);
    }

    #[test]
    fn zero_score_self_imitation_is_a_no_op() {
        let mut q = exact_q();
        let v = view(3);
        q.nudge(Head::Primitive, &v.features, 1, 2, 0.3);
        let before = q.snapshot();
        update_self_imitation(&mut q, &[(&v.features, 4)], 1, 0.0, 1.0, 0.1);
        assert_eq!(q.snapshot(), before);
        let loss = update_self_imitation(&mut q, &[(&v.features, 4)], 1, 1.0, 1.0, 0.1);
        assert!((loss - 1.3).abs() < 1e-12);
        assert_ne!(q.snapshot(), before);
    }

    #[test]
    fn loop_erasure_keeps_last_visits() {
        // a b c b d a e  ->  a e  (the second `a` replaces everything since the first)
        assert_eq!(loop_erased(&[1, 2, 3, 2, 4, 1, 5]), vec![5, 6]);
        assert_eq!(loop_erased(&[1, 2, 3, 2, 4]), vec![0, 3, 4]);
        assert_eq!(loop_erased(&[]), Vec::<usize>::new());
    }

    proptest::proptest! {
        #[test]
        fn loop_erasure_is_a_unique_suffix_preserving_subsequence(keys in proptest::collection::vec(0u64..6, 0..40)) {
            let kept = loop_erased(&keys);
            proptest::prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
            let mut seen = std::collections::HashSet::new();
            proptest::prop_assert!(kept.iter().all(|&k| seen.insert(keys[k])));
            if let Some(&last) = keys.last() {
                proptest::prop_assert_eq!(keys[*kept.last().unwrap()], last);
                proptest::prop_assert_eq!(*kept.last().unwrap(), keys.len() - 1);
            }
            // Each kept step is the final visit of its key before the next kept step's key first appears.
            for w in kept.windows(2) {
                proptest::prop_assert!(!keys[w[0] + 1..w[1]].contains(&keys[w[0]]));
            }
        }
    }
}
