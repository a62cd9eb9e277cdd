//! `verify`: property checks with measured values, as a key-value report.

use std::fmt::Write as _;
use std::thread;

use claycalc::checks::{
    closed_calciner_drift, cyclone_grid, jacobian_sweep, observed_orders, timed_runs, JACOBIAN_TOL,
};
use claycalc::dae::{Method, SolverConfig};
use claycalc::plant::{Plant, NCYCLONES};

use crate::run::initial_state;
use crate::scenario::Scenario;

pub const DRIFT_TOL: f64 = 1e-8;
pub const SPECIES_CLOSURE_TOL: f64 = 1e-3;
pub const ENERGY_CLOSURE_TOL: f64 = 5e-3;
pub const ORDER_TOL: f64 = 0.2;
pub const SPEED_RATIO_LIMIT: f64 = 0.5;

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub jacobian_states: usize,
    pub seed: u64,
    /// Adds a value to one analytic Jacobian entry (row, column, value).
    pub fault: Option<(usize, usize, f64)>,
    pub skip_timing: bool,
}

impl VerifyOptions {
    pub fn new() -> Self {
        VerifyOptions { jacobian_states: 20, seed: 7, fault: None, skip_timing: false }
    }
}

/// One check: name, verdict and measured values.
#[derive(Clone, Debug)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub values: Vec<(String, String)>,
}

impl CheckEntry {
    fn new(name: &str, passed: bool) -> Self {
        CheckEntry { name: name.into(), passed, values: Vec::new() }
    }

    fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.values.push((key.into(), value.to_string()));
        self
    }

    fn failed(name: &str, err: impl std::fmt::Display) -> Self {
        CheckEntry::new(name, false).with("error", err)
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckEntry>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "[{}]", c.name);
            let _ = writeln!(s, "status = {}", if c.passed { "pass" } else { "fail" });
            for (k, v) in &c.values {
                let _ = writeln!(s, "{k} = {v}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "[summary]\nstatus = {}", if self.passed() { "pass" } else { "fail" });
        s
    }
}

fn jacobian_entry(plant: &Plant, z: &[f64], opts: &VerifyOptions, cfg: &SolverConfig) -> CheckEntry {
    match jacobian_sweep(plant, z, opts.jacobian_states, opts.seed, opts.fault, cfg) {
        Ok(s) => CheckEntry::new("jacobian", s.passed())
            .with("states", s.states)
            .with("max_discrepancy", format!("{:e}", s.worst.max_discrepancy))
            .with("limit", format!("{JACOBIAN_TOL:e}"))
            .with("missing_from_pattern", s.worst.missing_from_pattern)
            .with("row", s.worst.worst_row)
            .with("column", s.worst.worst_col)
            .with("worst", s.entry),
        Err(e) => CheckEntry::failed("jacobian", e),
    }
}

fn drift_entry(plant: &Plant, cfg: &SolverConfig) -> CheckEntry {
    let name = "conservation.closed_calciner";
    match closed_calciner_drift(&plant.thermo, &plant.params.kinetics, plant.layout.nz, 60.0, cfg) {
        Ok(d) => CheckEntry::new(name, d.worst() < DRIFT_TOL)
            .with("a_moiety_drift", format!("{:e}", d.a))
            .with("b_moiety_drift", format!("{:e}", d.b))
            .with("quartz_drift", format!("{:e}", d.q))
            .with("converted", format!("{:.4}", d.converted))
            .with("limit", format!("{DRIFT_TOL:e}")),
        Err(e) => CheckEntry::failed(name, e),
    }
}

fn closure_entries(plant: &Plant, z: &[f64]) -> Vec<CheckEntry> {
    let c = plant.closure(z);
    let species = CheckEntry::new("conservation.steady_species", c.a_moiety.max(c.water) < SPECIES_CLOSURE_TOL)
        .with("a_moiety", format!("{:e}", c.a_moiety))
        .with("water", format!("{:e}", c.water))
        .with("limit", format!("{SPECIES_CLOSURE_TOL:e}"));
    let energy = CheckEntry::new("conservation.steady_energy", c.energy < ENERGY_CLOSURE_TOL)
        .with("relative", format!("{:e}", c.energy))
        .with("absolute_W", format!("{:e}", c.energy_abs))
        .with("limit", format!("{ENERGY_CLOSURE_TOL:e}"));
    let ev = plant.evaluate(z);
    let mut ordered = true;
    let mut worst = f64::INFINITY;
    for k in 0..NCYCLONES {
        let s = plant.layout.read_cyclone(z, k);
        let (p_in, p_out) = (ev.inlets[k].p_in, ev.inlets[k].p_out);
        for (hi, lo) in [(p_in, s.p1), (s.p1, s.p2), (s.p2, p_out)] {
            ordered &= hi >= lo;
            worst = worst.min(hi - lo);
        }
    }
    let pressure = CheckEntry::new("cyclone.pressure_ordering", ordered).with("smallest_drop_Pa", format!("{worst:e}"));
    vec![species, energy, pressure]
}

fn order_entry() -> CheckEntry {
    let mut entry = CheckEntry::new("dae_order", true);
    for (m, expected) in [(Method::ImplicitEuler, 1.0), (Method::Bdf2, 2.0)] {
        match observed_orders(m) {
            Ok(o) => {
                entry.passed &= o.iter().all(|x| (x - expected).abs() <= ORDER_TOL);
                let list: Vec<String> = o.iter().map(|x| format!("{x:.4}")).collect();
                entry = entry.with(&format!("{m}"), format!("[{}]", list.join(", ")));
            }
            Err(e) => return CheckEntry::failed("dae_order", e),
        }
    }
    entry.with("tolerance", ORDER_TOL)
}

fn cyclone_entry() -> CheckEntry {
    let g = cyclone_grid(10_000, 11);
    CheckEntry::new("cyclone.grid", g.passed())
        .with("points", g.points)
        .with("eta_min", format!("{:e}", g.eta_min))
        .with("eta_max", format!("{:e}", g.eta_max))
        .with("outlet_loss_identity", format!("{:e}", g.loss_identity))
}

fn timing_entry(plant: &Plant, z: &[f64], t_end: f64, cfg: &SolverConfig) -> CheckEntry {
    match timed_runs(plant, z, t_end, cfg) {
        Ok(t) => CheckEntry::new("speed", t.ratio() <= SPEED_RATIO_LIMIT)
            .with("analytic_s", format!("{:.3}", t.analytic.as_secs_f64()))
            .with("finite_difference_s", format!("{:.3}", t.finite_difference.as_secs_f64()))
            .with("ratio", format!("{:.3}", t.ratio()))
            .with("limit", SPEED_RATIO_LIMIT),
        Err(e) => CheckEntry::failed("speed", e),
    }
}

/// Runs all checks. Independent checks run concurrently; the timing runs
/// afterwards on an idle machine.
pub fn verify(sc: &Scenario, opts: &VerifyOptions) -> claycalc::Result<VerifyReport> {
    let plant = sc.build()?;
    let cfg = sc.solver()?;
    let mut report = VerifyReport::default();
    let z = match initial_state(&plant, &cfg) {
        Ok(z) => z,
        Err(e) => {
            report.checks.push(CheckEntry::failed("steady_state", e));
            report.checks.push(order_entry());
            report.checks.push(cyclone_entry());
            return Ok(report);
        }
    };
    let (jac, drift, order, grid) = thread::scope(|s| {
        let jac = s.spawn(|| jacobian_entry(&plant, &z, opts, &cfg));
        let drift = s.spawn(|| drift_entry(&plant, &cfg));
        let order = s.spawn(order_entry);
        let grid = s.spawn(cyclone_entry);
        (jac.join(), drift.join(), order.join(), grid.join())
    });
    let joined = |r: thread::Result<CheckEntry>, name: &str| r.unwrap_or_else(|_| CheckEntry::failed(name, "panicked"));
    report.checks.push(joined(jac, "jacobian"));
    report.checks.push(joined(drift, "conservation.closed_calciner"));
    report.checks.extend(closure_entries(&plant, &z));
    report.checks.push(joined(order, "dae_order"));
    report.checks.push(joined(grid, "cyclone.grid"));
    if !opts.skip_timing {
        report.checks.push(timing_entry(&plant, &z, sc.t_end(), &cfg));
    }
    Ok(report)
}
