//! `simulate` and `steady`: time series, stream tables and run reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use claycalc::calciner::MACH_LIMIT_VELOCITY;
use claycalc::dae::{jacobian_check, simulate, JacobianEngine, JacobianMode, SolverConfig};
use claycalc::plant::{Plant, NCYCLONES};
use claycalc::thermo::{A, AB2};
use log::info;

use crate::scenario::Scenario;

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const STEADY_FILE: &str = "steady_state.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.txt";

/// Stream-table file name for time `t`.
pub fn stream_file(t: f64) -> String {
    format!("streams_t{t}.csv")
}

/// Column headers of the time series, each with its unit.
pub fn timeseries_header(nz: usize) -> Vec<String> {
    let mut h = vec!["t [s]".to_string()];
    for k in 1..=NCYCLONES {
        for c in ["T_s [K]", "T_g [K]", "P [Pa]", "v1 [m/s]", "v2 [m/s]"] {
            h.push(format!("cyclone{k}.{c}"));
        }
    }
    for i in 1..=nz {
        for c in ["T_s [K]", "T_g [K]", "P [Pa]", "CD [-]"] {
            h.push(format!("cell{i}.{c}"));
        }
    }
    for k in 1..=5 {
        h.push(format!("P{k} [Pa]"));
    }
    h.push("CC [kg/h]".into());
    h.push("CD [-]".into());
    h
}

fn timeseries_row(plant: &Plant, t: f64, z: &[f64]) -> Vec<f64> {
    let mut row = vec![t];
    for k in 0..NCYCLONES {
        let s = plant.layout.read_cyclone(z, k);
        row.extend([s.t_s, s.t_g, s.p, s.v1, s.v2]);
    }
    let m = plant.thermo.molar_masses();
    for cell in plant.layout.calciner().read(z) {
        let den = cell.c[AB2] * m[AB2] + cell.c[A] * m[A];
        let cd = if den > 0.0 { cell.c[A] * m[A] / den } else { 0.0 };
        row.extend([cell.t_s, cell.t_g, cell.p, cd]);
    }
    for k in 1..=5 {
        row.push(z[plant.layout.pressure(k)]);
    }
    let out = plant.outputs(z);
    row.push(out.cc * 3600.0);
    row.push(out.cd);
    row
}

fn csv_line(values: &[f64]) -> String {
    let cells: Vec<String> = values.iter().map(|v| format!("{v:e}")).collect();
    cells.join(",")
}

fn write_report_header(report: &mut String, sc: &Scenario, cfg: &SolverConfig) {
    let _ = writeln!(report, "[run]");
    let _ = writeln!(report, "N_z = {}", sc.nz());
    let _ = writeln!(report, "method = {}", cfg.method);
    let _ = writeln!(report, "jacobian = {}", cfg.jacobian);
    let _ = writeln!(report, "t_end = {} s", sc.t_end());
}

fn write_state_report(report: &mut String, plant: &Plant, z: &[f64], label: &str) {
    let c = plant.closure(z);
    let out = plant.outputs(z);
    let _ = writeln!(report, "\n[{label}]");
    let _ = writeln!(report, "CC = {:e} kg/h", out.cc * 3600.0);
    let _ = writeln!(report, "CD = {:e}", out.cd);
    let _ = writeln!(report, "closure.a_moiety = {:e}", c.a_moiety);
    let _ = writeln!(report, "closure.water = {:e}", c.water);
    let _ = writeln!(report, "closure.energy = {:e}", c.energy);
    let _ = writeln!(report, "closure.energy_abs = {:e} W", c.energy_abs);
}

fn write_jacobian_report(report: &mut String, plant: &Plant, z: &[f64]) {
    let engine = JacobianEngine::new(plant, z, JacobianMode::Analytic);
    let chk = jacobian_check(plant, &engine, z);
    let _ = writeln!(report, "\n[jacobian_check]");
    let _ = writeln!(report, "status = {}", if chk.passed(claycalc::checks::JACOBIAN_TOL) { "pass" } else { "fail" });
    let _ = writeln!(report, "max_discrepancy = {:e}", chk.max_discrepancy);
    let _ = writeln!(report, "missing_from_pattern = {}", chk.missing_from_pattern);
    let _ = writeln!(report, "worst = {}", chk.describe(plant));
    let _ = writeln!(report, "nnz = {}", engine.pattern.nnz());
    let _ = writeln!(report, "colors = {}", engine.ncolors);
}

/// Writes a diagnostics file next to the outputs and passes the error on.
fn fail(out: &Path, sc: &Scenario, stage: &str, err: claycalc::Error) -> anyhow::Error {
    let text = format!("stage = {stage}\nerror = {err}\n\n# scenario\n{}", sc.to_text());
    if let Err(e) = fs::write(out.join(DIAGNOSTICS_FILE), text) {
        log::warn!("could not write diagnostics: {e}");
    }
    anyhow::Error::new(err).context(format!("{stage} failed; see {}", out.join(DIAGNOSTICS_FILE).display()))
}

/// Initial state: steady state under the inputs in force at t = 0.
pub fn initial_state(plant: &Plant, cfg: &SolverConfig) -> claycalc::Result<Vec<f64>> {
    plant.steady_state(None, cfg).map(|(z, _)| z)
}

pub struct RunSummary {
    pub samples: usize,
    pub steps: usize,
    pub final_cd: f64,
}

pub fn run_simulation(sc: &Scenario, out: &Path) -> Result<RunSummary> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut plant = sc.build()?;
    let cfg = sc.solver()?;
    info!("{} unknowns, {} cells", plant.layout.n(), plant.layout.nz);
    let z0 = initial_state(&plant, &cfg).map_err(|e| fail(out, sc, "initial steady state", e))?;

    let t_end = sc.t_end();
    let tables = sc.stream_table_times();
    let mut samples = sc.sample_times();
    samples.extend(tables.iter().copied().filter(|t| *t <= t_end));
    samples.sort_by(f64::total_cmp);
    samples.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let traj = if t_end > 0.0 {
        simulate(&mut plant, z0.clone(), 0.0, t_end, &samples, &cfg).map_err(|e| fail(out, sc, "integration", e))?
    } else {
        claycalc::dae::Trajectory { t: vec![0.0], z: vec![z0.clone()], stats: Default::default() }
    };

    let mut ts = timeseries_header(plant.layout.nz).join(",");
    ts.push('\n');
    for (t, z) in traj.t.iter().zip(&traj.z) {
        plant.set_inputs(plant.schedule.at(*t));
        ts.push_str(&csv_line(&timeseries_row(&plant, *t, z)));
        ts.push('\n');
    }
    fs::write(out.join(TIMESERIES_FILE), ts)?;

    for t in &tables {
        let Some(i) = traj.t.iter().position(|s| (s - t).abs() < 1e-9) else {
            log::warn!("stream table at t = {t} s lies outside the run");
            continue;
        };
        plant.set_inputs(plant.schedule.at(*t));
        fs::write(out.join(stream_file(*t)), plant.stream_table(&traj.z[i]).to_csv())?;
    }

    let mut v_max: f64 = 0.0;
    for (t, z) in traj.t.iter().zip(&traj.z) {
        plant.set_inputs(plant.schedule.at(*t));
        v_max = v_max.max(plant.max_calciner_velocity(z));
    }
    if v_max > MACH_LIMIT_VELOCITY {
        log::warn!("calciner gas velocity reaches {v_max:.1} m/s, beyond the Mach 0.2 range of the Darcy law");
    }

    let (t_last, z_last) = traj.last().expect("at least the initial sample");
    plant.set_inputs(plant.schedule.at(t_last));
    let mut report = String::new();
    write_report_header(&mut report, sc, &cfg);
    let s = traj.stats;
    let _ = writeln!(report, "steps = {}", s.steps);
    let _ = writeln!(report, "rejected = {}", s.rejected);
    let _ = writeln!(report, "newton_iters = {}", s.newton_iters);
    let _ = writeln!(report, "jacobians = {}", s.jacobians);
    let _ = writeln!(report, "max_calciner_velocity = {v_max:e} m/s");
    write_state_report(&mut report, &plant, z_last, "final_state");
    write_jacobian_report(&mut report, &plant, z_last);
    fs::write(out.join(REPORT_FILE), report)?;

    Ok(RunSummary { samples: traj.t.len(), steps: s.steps, final_cd: plant.outputs(z_last).cd })
}

/// Steady state under the inputs in force at the end of the scenario.
pub fn run_steady(sc: &Scenario, out: &Path) -> Result<f64> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut plant = sc.build()?;
    let cfg = sc.solver()?;
    plant.set_inputs(plant.schedule.at(sc.t_end()));
    let (z, iters) = plant.steady_state(None, &cfg).map_err(|e| fail(out, sc, "steady-state solve", e))?;

    let mut state = String::from("variable,value [SI]\n");
    for (i, v) in z.iter().enumerate() {
        let _ = writeln!(state, "{},{v:e}", plant.layout.var_name(i));
    }
    fs::write(out.join(STEADY_FILE), state)?;
    fs::write(out.join(stream_file(sc.t_end())), plant.stream_table(&z).to_csv())?;

    let mut report = String::new();
    write_report_header(&mut report, sc, &cfg);
    let _ = writeln!(report, "newton_iters = {iters}");
    write_state_report(&mut report, &plant, &z, "steady_state");
    write_jacobian_report(&mut report, &plant, &z);
    fs::write(out.join(REPORT_FILE), report)?;
    Ok(plant.outputs(&z).cd)
}
