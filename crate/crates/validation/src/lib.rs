//! Fixtures and measurements behind the acceptance criteria.

use std::io::Write;
use std::time::Instant;

use claycalc::calciner::VariableOrdering;
use claycalc::dae::SolverConfig;
use claycalc::plant::{Disturbances, InputSchedule, Plant, PlantInputs, PlantParams, NCYCLONES};
use claycalc::thermo::Thermo;

/// Writes one PASS/FAIL line straight to stderr, past the test harness capture.
pub fn report(n: u32, title: &str, passed: bool, detail: &str, started: Instant) {
    let line = format!(
        "acceptance criterion {n} ({title}): {} | {detail} | {:.2} s\n",
        if passed { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

/// Plant driven by the 100 → 200 kg/h feed step at 60 s.
pub fn feed_step_plant() -> Plant {
    Plant::new(
        Thermo::default(),
        PlantParams::default(),
        InputSchedule::feed_step(),
        Disturbances::default(),
        VariableOrdering::ByCell,
    )
    .expect("default plant")
}

/// Steady state at a constant clay feed in kg/h.
pub fn steady_at(feed_kg_h: f64) -> (Plant, Vec<f64>) {
    let inputs = PlantInputs { clay_feed: feed_kg_h / 3600.0, ..PlantInputs::default() };
    let plant = Plant::with_inputs(&inputs, 10).expect("default plant");
    let (z, _) = plant.steady_state(None, &SolverConfig::default()).expect("steady state");
    (plant, z)
}

/// Largest violation of P_in ≥ P_1 ≥ P_2 ≥ P_out over the three cyclones
/// (negative when ordered).
pub fn pressure_disorder(plant: &Plant, z: &[f64]) -> f64 {
    let ev = plant.evaluate(z);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..NCYCLONES {
        let s = plant.layout.read_cyclone(z, k);
        let chain = [ev.inlets[k].p_in, s.p1, s.p2, ev.inlets[k].p_out];
        for w in chain.windows(2) {
            worst = worst.max(w[1] - w[0]);
        }
    }
    worst
}

/// Time after `t_step` beyond which `series` stays within `band` of `target`.
pub fn settling_time(series: &[(f64, f64)], target: f64, band: f64, t_step: f64) -> f64 {
    series.iter().rev().find(|(_, y)| (y - target).abs() > band).map_or(0.0, |(t, _)| (t - t_step).max(0.0))
}
