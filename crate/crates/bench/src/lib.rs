//! Benchmark fixtures on the desk-scale scenario.

use std::path::Path;

use ceil_core::baselines::Method;
use ceil_core::comms::TeacherVariant;
use ceil_core::harness::{ExperimentConfig, Scenario};
use ceil_core::learner::Learner;

/// The default desk scenario for `method` with the performance-based teacher.
pub fn desk_scenario(method: Method) -> Scenario {
    let config = ExperimentConfig::desk(method, TeacherVariant::PerformanceBased);
    Scenario::new(&config, Path::new(".")).expect("desk config is valid")
}

/// An untrained learner bound to `scenario`.
pub fn fresh_learner(scenario: &Scenario, seed: u64) -> Learner {
    Learner::new(scenario.config.hyper, scenario.config.model, &scenario.graph, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let s = desk_scenario(Method::Ceil);
        let l = fresh_learner(&s, 0);
        assert!(l.replay().is_empty());
    }
}
