//! Shared fixtures for the benchmarks.

use bnk_core::data::{apply_transforms, load_panel, PanelSchema, TransformSpec};
use bnk_core::simulation::{simulate_observables, SimulationPlan};
use bnk_core::{StructuralParams, TimeSeriesPanel};

/// A Monte Carlo sample of 200 quarters at the reference calibration.
pub fn simulated_sample(seed: u64) -> TimeSeriesPanel {
    simulate_observables(&SimulationPlan::monte_carlo(StructuralParams::table1(), seed, 0)).expect("simulation")
}

/// The packaged panel over the estimation window with default transforms.
pub fn packaged_sample() -> TimeSeriesPanel {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/replication_panel.csv");
    let schema = PanelSchema::with_window("1962Q2".parse().expect("date"), "2016Q4".parse().expect("date"));
    let panel = load_panel(path, &schema).expect("packaged panel").panel;
    apply_transforms(&panel, &TransformSpec::defaults()).expect("transforms")
}
