//! Shared fixtures for the benchmarks.

use claycalc::calciner::VariableOrdering;
use claycalc::dae::SolverConfig;
use claycalc::plant::{Disturbances, InputSchedule, Plant, PlantParams};
use claycalc::thermo::Thermo;

/// Feed-step plant with `nz` cells and its steady state at 100 kg/h.
pub fn feed_step(nz: usize) -> (Plant, Vec<f64>) {
    let mut params = PlantParams::default();
    params.calciner.nz = nz;
    let plant = Plant::new(
        Thermo::default(),
        params,
        InputSchedule::feed_step(),
        Disturbances::default(),
        VariableOrdering::ByCell,
    )
    .expect("valid plant");
    let (z, _) = plant.steady_state(None, &SolverConfig::default()).expect("steady state");
    (plant, z)
}
