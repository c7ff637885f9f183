//! Benchmark fixtures for the closed-loop simulation.

use ivdrem_core::{Scenario, SimConfig};

/// Reference scenario shortened to `t_end` seconds with the window reduced
/// so the delay terms are active inside short benchmark runs.
pub fn short_run(t_end: f64) -> (Scenario, SimConfig) {
    let mut scenario = Scenario::reference_two_link();
    scenario.gains.window = (t_end / 2.0).max(0.01);
    let config = SimConfig {
        t_end,
        decimation: 100,
        ..SimConfig::default()
    };
    (scenario, config)
}
