use serde::{Deserialize, Serialize};

use super::Feedback;
use crate::util::{micro_to_decimal, real_to_micro};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeedbackKind {
    CorrectInstructive,
    IncorrectInstructive,
    Evaluative,
}

impl FeedbackKind {
    pub const ALL: [FeedbackKind; 3] =
        [FeedbackKind::CorrectInstructive, FeedbackKind::IncorrectInstructive, FeedbackKind::Evaluative];

    pub fn of(feedback: &Feedback) -> Self {
        match feedback {
            Feedback::Instructive { was_learner_correct: true, .. } => FeedbackKind::CorrectInstructive,
            Feedback::Instructive { .. } => FeedbackKind::IncorrectInstructive,
            Feedback::Evaluative { .. } => FeedbackKind::Evaluative,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Per-request communication costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostSchedule {
    pub c_correct: f64,
    pub c_incorrect: f64,
    pub c_eval: f64,
}

impl Default for CostSchedule {
    fn default() -> Self {
        Self { c_correct: 0.01, c_incorrect: 0.05, c_eval: 0.2 }
    }
}

impl CostSchedule {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("c_correct", self.c_correct), ("c_incorrect", self.c_incorrect), ("c_eval", self.c_eval)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        Ok(())
    }

    /// Cost of one request of `kind` in millionths.
    pub fn micro(&self, kind: FeedbackKind) -> u64 {
        real_to_micro(match kind {
            FeedbackKind::CorrectInstructive => self.c_correct,
            FeedbackKind::IncorrectInstructive => self.c_incorrect,
            FeedbackKind::Evaluative => self.c_eval,
        })
    }

    pub fn cost(&self, kind: FeedbackKind) -> f64 {
        self.micro(kind) as f64 / 1e6
    }
}

/// Running request counts and exact total cost (integer millionths).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    unit_micro: [u64; 3],
    counts: [u64; 3],
    total_micro: u64,
}

impl CostLedger {
    pub fn new(schedule: &CostSchedule) -> Self {
        Self { unit_micro: FeedbackKind::ALL.map(|k| schedule.micro(k)), counts: [0; 3], total_micro: 0 }
    }

    /// Records one feedback and returns its cost in millionths.
    pub fn charge(&mut self, feedback: &Feedback) -> u64 {
        self.charge_kind(FeedbackKind::of(feedback))
    }

    /// Records one request of `kind` (used for primitive-action labels, which
    /// carry no intention) and returns its cost in millionths.
    pub fn charge_kind(&mut self, kind: FeedbackKind) -> u64 {
        self.counts[kind.slot()] += 1;
        let c = self.unit_micro[kind.slot()];
        self.total_micro += c;
        c
    }

    pub fn count(&self, kind: FeedbackKind) -> u64 {
        self.counts[kind.slot()]
    }

    pub fn request_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total_micro(&self) -> u64 {
        self.total_micro
    }

    pub fn total(&self) -> f64 {
        self.total_micro as f64 / 1e6
    }

    /// Exact decimal rendering of the total, e.g. `0.480000`.
    pub fn total_decimal(&self) -> String {
        micro_to_decimal(self.total_micro)
    }

    pub fn unit_micro(&self, kind: FeedbackKind) -> u64 {
        self.unit_micro[kind.slot()]
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::taskgraph::IntentionId;

    fn instructive(ok: bool) -> Feedback {
        Feedback::Instructive { correct: IntentionId::Done, was_learner_correct: ok }
    }

    #[test]
    fn mixed_charges_sum_exactly() {
        let mut l = CostLedger::new(&CostSchedule::default());
        for _ in 0..3 {
            l.charge(&instructive(true));
        }
        l.charge(&instructive(false));
        l.charge(&Feedback::Evaluative { score: 1.0 });
        l.charge(&Feedback::Evaluative { score: 0.0 });
        assert_eq!(l.total_micro(), 480_000);
        assert_eq!(l.total_decimal(), "0.480000");
        assert_eq!(l.request_count(), 6);
    }

    #[test]
    fn empty_ledger_is_zero() {
        let l = CostLedger::new(&CostSchedule::default());
        assert_eq!(l.total_micro(), 0);
        assert_eq!(l.request_count(), 0);
    }

    #[test]
    fn a_million_small_charges_do_not_drift() {
        let mut l = CostLedger::new(&CostSchedule::default());
        for _ in 0..1_000_000 {
            l.charge(&instructive(true));
        }
        assert_eq!(l.total_decimal(), "10000.000000");
    }

    proptest! {
        #[test]
        fn total_matches_closed_form(events in proptest::collection::vec(0u8..3, 0..500)) {
            let schedule = CostSchedule::default();
            let mut l = CostLedger::new(&schedule);
            for e in &events {
                let f = match e { 0 => instructive(true), 1 => instructive(false), _ => Feedback::Evaluative { score: 0.0 } };
                l.charge(&f);
            }
            let closed: u64 = FeedbackKind::ALL.iter().map(|&k| l.count(k) * schedule.micro(k)).sum();
            prop_assert_eq!(l.total_micro(), closed);
            prop_assert_eq!(l.request_count(), events.len() as u64);
        }
    }
}
