//! Model-level property checks shared by the verification command and the
//! acceptance tests.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calciner::{CalcinerBoundary, CalcinerParams, CalcinerSystem, Cell, VariableOrdering};
use crate::dae::{
    consistent_init_simple, integrate, jacobian_check, simulate, DaeSystem, Integrator, JacobianCheck, JacobianEngine,
    JacobianMode, Method, SolverConfig,
};
use crate::error::Result;
use crate::cyclone::{outlet_loss_coefficient, separation_efficiency, CycloneGeometry};
use crate::kinetics::KineticParams;
use crate::plant::Plant;
use crate::scalar::Scalar;
use crate::thermo::{Thermo, A, AB2, B, NSPECIES, Q};

pub const JACOBIAN_TOL: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct JacobianSweep {
    pub states: usize,
    /// Worst check over all states.
    pub worst: JacobianCheck,
    pub worst_state: usize,
    /// Human-readable name of the worst entry.
    pub entry: String,
}

impl JacobianSweep {
    pub fn passed(&self) -> bool {
        self.worst.passed(JACOBIAN_TOL)
    }
}

/// Compares analytic and central-difference Jacobians at `states` random
/// consistent states around `z_ref`: solids ±20 %, temperatures ±10 K.
pub fn jacobian_sweep(
    plant: &Plant,
    z_ref: &[f64],
    states: usize,
    seed: u64,
    fault: Option<(usize, usize, f64)>,
    cfg: &SolverConfig,
) -> Result<JacobianSweep> {
    let mut engine = JacobianEngine::new(plant, z_ref, JacobianMode::Analytic);
    engine.fault = fault;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Option<JacobianSweep> = None;
    for k in 0..states {
        let mut z = plant.perturbed(z_ref, &mut rng, 0.2, 10.0);
        consistent_init_simple(plant, &mut z, cfg)?;
        let chk = jacobian_check(plant, &engine, &z);
        let worse = out.as_ref().is_none_or(|o| {
            !(chk.max_discrepancy <= o.worst.max_discrepancy) || chk.missing_from_pattern > o.worst.missing_from_pattern
        });
        if worse {
            let entry = chk.describe(plant);
            out = Some(JacobianSweep { states: k + 1, worst: chk, worst_state: k, entry });
        }
        if let Some(o) = out.as_mut() {
            o.states = k + 1;
        }
    }
    Ok(out.expect("at least one state"))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoietyDrift {
    /// Relative change of Σ(AB₂ + A).
    pub a: f64,
    /// Relative change of Σ(2 AB₂ + B).
    pub b: f64,
    /// Relative change of the quartz inventory.
    pub q: f64,
    /// Fraction of kaolinite converted during the run.
    pub converted: f64,
}

impl MoietyDrift {
    pub fn worst(&self) -> f64 {
        self.a.max(self.b).max(self.q)
    }
}

/// Closed adiabatic calciner of `nz` cells started with hot raw clay and a
/// temperature gradient along the tube.
pub fn closed_calciner(thermo: &Thermo, kinetics: &KineticParams, nz: usize) -> Result<(CalcinerSystem, Vec<f64>)> {
    let params = CalcinerParams { nz, q_amb: 0.0, ..CalcinerParams::default() };
    let p0 = 1.05e5;
    let sys = CalcinerSystem::new(
        thermo.clone(),
        *kinetics,
        params,
        CalcinerBoundary::closed(p0),
        VariableOrdering::ByCell,
    )?;
    let cells: Vec<Cell<f64>> = (0..nz)
        .map(|i| {
            let frac = i as f64 / (nz.max(2) - 1) as f64;
            let t_s = 720.0 + 40.0 * frac;
            let t_g = t_s + 5.0;
            let p = p0;
            let mut c = [0.0; NSPECIES];
            c[AB2] = 0.8;
            c[Q] = 1.1;
            let c = Cell::fill_gas(thermo, c, 0.15, t_s, t_g, p);
            Cell::consistent(thermo, c, t_s, t_g, p)
        })
        .collect();
    let z = sys.state(&cells);
    Ok((sys, z))
}

/// Integrates the closed calciner over `t_end` seconds and reports the drift
/// of the conserved moieties.
pub fn closed_calciner_drift(
    thermo: &Thermo,
    kinetics: &KineticParams,
    nz: usize,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<MoietyDrift> {
    let (sys, z0) = closed_calciner(thermo, kinetics, nz)?;
    let traj = integrate(&sys, z0, 0.0, t_end, &[0.0, t_end], cfg)?;
    let start = sys.inventory(&traj.z[0]);
    let end = sys.inventory(traj.z.last().expect("end sample"));
    let a = |m: &[f64; NSPECIES]| m[AB2] + m[A];
    let b = |m: &[f64; NSPECIES]| 2.0 * m[AB2] + m[B];
    let rel = |x0: f64, x1: f64| (x1 - x0).abs() / x0.abs();
    Ok(MoietyDrift {
        a: rel(a(&start), a(&end)),
        b: rel(b(&start), b(&end)),
        q: rel(start[Q], end[Q]),
        converted: 1.0 - end[AB2] / start[AB2],
    })
}

/// Scalar linear test DAE x' = −x, 0 = y − x, x(0) = 1.
pub struct LinearTestDae {
    mask: [bool; 2],
}

impl Default for LinearTestDae {
    fn default() -> Self {
        LinearTestDae { mask: [true, false] }
    }
}

impl DaeSystem for LinearTestDae {
    fn n(&self) -> usize {
        2
    }

    fn differential(&self) -> &[bool] {
        &self.mask
    }

    fn residual<S: Scalar>(&self, z: &[S], out: &mut [S]) {
        out[0] = -z[0];
        out[1] = z[1] - z[0];
    }
}

/// Step sizes of the order test.
pub const ORDER_STEPS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

/// Error at t = 1 of fixed-step runs of the linear test DAE.
pub fn fixed_step_error(method: Method, h: f64) -> Result<f64> {
    let sys = LinearTestDae::default();
    let cfg = SolverConfig { method, ..SolverConfig::default() };
    let z0 = vec![1.0, 1.0];
    let engine = JacobianEngine::new(&sys, &z0, cfg.jacobian);
    let mut integ = Integrator::new(&sys, engine, 0.0, z0, cfg);
    for _ in 0..(1.0 / h).round() as usize {
        integ.step_fixed(h)?;
    }
    Ok((integ.z[0] - (-1.0f64).exp()).abs())
}

/// Observed orders log₂(e_h / e_{h/2}) over [`ORDER_STEPS`].
pub fn observed_orders(method: Method) -> Result<Vec<f64>> {
    let errs = ORDER_STEPS.iter().map(|h| fixed_step_error(method, *h)).collect::<Result<Vec<_>>>()?;
    Ok(errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

#[derive(Clone, Copy, Debug)]
pub struct Timing {
    pub analytic: Duration,
    pub finite_difference: Duration,
}

impl Timing {
    /// Analytic wall-clock as a fraction of the finite-difference one.
    pub fn ratio(&self) -> f64 {
        self.analytic.as_secs_f64() / self.finite_difference.as_secs_f64()
    }
}

/// Runs the same simulation with both Jacobian modes.
pub fn timed_runs(plant: &Plant, z0: &[f64], t_end: f64, cfg: &SolverConfig) -> Result<Timing> {
    let run = |mode: JacobianMode| -> Result<Duration> {
        let mut p = plant.clone();
        let cfg = SolverConfig { jacobian: mode, ..*cfg };
        let t = Instant::now();
        simulate(&mut p, z0.to_vec(), 0.0, t_end, &[t_end], &cfg)?;
        Ok(t.elapsed())
    };
    let analytic = run(JacobianMode::Analytic)?;
    let finite_difference = run(JacobianMode::FiniteDifference)?;
    Ok(Timing { analytic, finite_difference })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycloneGrid {
    pub points: usize,
    pub eta_min: f64,
    pub eta_max: f64,
    /// Worst relative mismatch between the closed-form outlet loss
    /// coefficient and v_θ² + v_a² built from the swirl components.
    pub loss_identity: f64,
}

impl CycloneGrid {
    pub fn passed(&self) -> bool {
        self.eta_min >= 0.0 && self.eta_max <= 1.0 && self.loss_identity <= 1e-12
    }
}

/// Separation efficiency over random (v₁, c₀, d_med, ρ_g, μ) in a Stairmand
/// cyclone of 0.3 m, and the outlet-loss identity over R_cx ∈ (0, 0.99).
pub fn cyclone_grid(points: usize, seed: u64) -> CycloneGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CycloneGeometry::stairmand(0.3);
    let mut out = CycloneGrid { points, eta_min: f64::INFINITY, eta_max: f64::NEG_INFINITY, loss_identity: 0.0 };
    for _ in 0..points {
        let v1 = rng.gen_range(0.0..40.0);
        let c0 = 10f64.powf(rng.gen_range(-6.0..0.0));
        let d_med = 10f64.powf(rng.gen_range(-6.5..-4.0));
        let rho_g = rng.gen_range(0.2..1.5);
        let mu = rng.gen_range(1.5e-5..5e-5);
        let eta = separation_efficiency(c0, v1, 2600.0, rho_g, mu, d_med, &g);
        out.eta_min = out.eta_min.min(eta);
        out.eta_max = out.eta_max.max(eta);
        if eta.is_nan() {
            out.eta_min = f64::NAN;
        }
        let r: f64 = rng.gen_range(1e-6..0.99);
        let v_a = 1.0 / (1.0 - r * r);
        let v_t2 = 2.0 * r.powi(3) / (1.0 - r * r).powi(3);
        let composed = v_t2 + v_a * v_a;
        let rel = (outlet_loss_coefficient(r) - composed).abs() / composed;
        out.loss_identity = out.loss_identity.max(rel);
    }
    out
}
