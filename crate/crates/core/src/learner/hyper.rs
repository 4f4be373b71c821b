use serde::{Deserialize, Serialize};

use super::qfunction::BackendKind;

/// Learner hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparams {
    pub gamma: f64,
    /// Hinge margin λ.
    pub margin: f64,
    /// Step size; `None` picks the backend default.
    pub learning_rate: Option<f64>,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the request budget over which ε decays linearly.
    pub epsilon_decay_fraction: f64,
    /// Cap on primitive steps per execution.
    pub max_execution_steps: usize,
    /// Cap on intention decisions per episode.
    pub max_macro_steps: usize,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Minimum replay batches drawn after each episode. More are drawn when the
    /// episode added more transitions than one batch holds.
    pub updates_per_episode: usize,
    /// Self-imitate only the loop-free path of an execution: where an
    /// observation recurs, the steps between its visits are dropped.
    pub loop_erased_imitation: bool,
    /// When the teacher confirms `Done` for a task, self-imitate under that
    /// task the primitive steps taken while it was on the stack.
    pub composed_imitation: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            margin: 0.03,
            learning_rate: None,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.3,
            max_execution_steps: 100,
            max_macro_steps: 64,
            buffer_capacity: 100_000,
            batch_size: 64,
            updates_per_episode: 1,
            loop_erased_imitation: true,
            composed_imitation: true,
        }
    }
}

impl Hyperparams {
    pub fn learning_rate(&self, backend: BackendKind) -> f64 {
        self.learning_rate.unwrap_or(match backend {
            BackendKind::Tabular => 0.03,
            BackendKind::Linear => 5e-5,
        })
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive =
            [("gamma", self.gamma), ("margin", self.margin), ("epsilon_decay_fraction", self.epsilon_decay_fraction)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.gamma > 1.0 {
            return Err(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if let Some(lr) = self.learning_rate {
            if !(lr.is_finite() && lr > 0.0) {
                return Err(format!("learning_rate must be positive, got {lr}"));
            }
        }
        for (name, v) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        for (name, v) in [
            ("max_execution_steps", self.max_execution_steps),
            ("max_macro_steps", self.max_macro_steps),
            ("buffer_capacity", self.buffer_capacity),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return Err(format!("{name} must be positive"));
            }
        }
        Ok(())
    }

    /// ε after `used` of `budget` requests.
    pub fn epsilon(&self, used: u64, budget: u64) -> f64 {
        let horizon = self.epsilon_decay_fraction * budget as f64;
        if horizon <= 0.0 {
            return self.epsilon_end;
        }
        let frac = used as f64 / horizon;
        if frac >= 1.0 {
            return self.epsilon_end;
        }
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}
