use super::{
    consistent_init, convergence_scales, damped_newton, eval, scaled_norm, DaeSystem, JacobianEngine, Method,
    ScaledLu, SolverConfig, SolverStats,
};
use crate::error::{Error, Result};

/// Newton update bound in the error-weighted norm.
const NEWTON_UPDATE_TOL: f64 = 0.05;

/// Systems whose inputs are piecewise constant in time.
pub trait Piecewise {
    /// Input discontinuities, sorted.
    fn breakpoints(&self) -> Vec<f64>;
    /// Applies the inputs valid from `t` on.
    fn activate(&mut self, t: f64);
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    pub stats: SolverStats,
}

impl Trajectory {
    pub fn last(&self) -> Option<(f64, &[f64])> {
        self.t.last().map(|t| (*t, self.z.last().expect("same length").as_slice()))
    }
}

struct Point {
    t: f64,
    z: Vec<f64>,
}

/// Variable-step implicit Euler / BDF2 integrator with Newton iteration.
pub struct Integrator<'s, D: DaeSystem> {
    sys: &'s D,
    pub cfg: SolverConfig,
    pub engine: JacobianEngine,
    pub t: f64,
    pub z: Vec<f64>,
    pub stats: SolverStats,
    /// Previous accepted points, most recent first.
    history: Vec<Point>,
    h: f64,
    diff: Vec<usize>,
    alg: Vec<usize>,
    var_scales: Vec<f64>,
    conv_scales: Vec<f64>,
}

enum Attempt {
    Converged { z: Vec<f64>, err: f64, order: usize },
    NewtonFailed(String),
}

impl<'s, D: DaeSystem> Integrator<'s, D> {
    /// Starts from `z0` at `t0`; `z0` must be consistent (see
    /// [`Integrator::initialize`]).
    pub fn new(sys: &'s D, engine: JacobianEngine, t0: f64, z0: Vec<f64>, cfg: SolverConfig) -> Self {
        let mask = sys.differential();
        let diff = (0..sys.n()).filter(|i| mask[*i]).collect();
        let alg = (0..sys.n()).filter(|i| !mask[*i]).collect();
        Integrator {
            sys,
            engine,
            t: t0,
            z: z0,
            stats: SolverStats::default(),
            history: Vec::new(),
            h: cfg.initial_step,
            diff,
            alg,
            var_scales: sys.var_scales(),
            conv_scales: convergence_scales(sys),
            cfg,
        }
    }

    /// Makes the algebraic variables consistent with the current
    /// differential state and forgets the step history.
    pub fn initialize(&mut self) -> Result<usize> {
        self.history.clear();
        self.h = self.h.min(self.cfg.initial_step.max(self.h * 1e-2));
        consistent_init(self.sys, &self.engine, &mut self.z, &self.cfg, &mut self.stats)
    }

    fn weights(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.var_scales).map(|(v, s)| self.cfg.abs_tol * s + self.cfg.rel_tol * v.abs()).collect()
    }

    fn attempt(&mut self, h: f64) -> Result<Attempt> {
        let sys = self.sys;
        let n = sys.n();
        let order = if self.cfg.method == Method::Bdf2 && self.history.len() >= 2 { 2 } else { 1 };
        let z0 = &self.z;

        // predictor and error constant
        let mut zp = z0.clone();
        let err_const;
        if let Some(p1) = self.history.first() {
            let hp = self.t - p1.t;
            if order == 2 {
                let p2 = &self.history[1];
                let hpp = p1.t - p2.t;
                // quadratic extrapolation through (t, t − hp, t − hp − hpp)
                let (t0, t1, t2) = (self.t, p1.t, p2.t);
                let tn = self.t + h;
                let l0 = (tn - t1) * (tn - t2) / ((t0 - t1) * (t0 - t2));
                let l1 = (tn - t0) * (tn - t2) / ((t1 - t0) * (t1 - t2));
                let l2 = (tn - t0) * (tn - t1) / ((t2 - t0) * (t2 - t1));
                for i in 0..n {
                    zp[i] = l0 * z0[i] + l1 * p1.z[i] + l2 * p2.z[i];
                }
                let w = h / hp;
                let c_le = h.powi(3) / 6.0 * (1.0 + w).powi(2) / (w * (1.0 + 2.0 * w));
                let c_p = h * (h + hp) * (h + hp + hpp) / 6.0;
                err_const = c_le / (c_le + c_p);
            } else {
                for i in 0..n {
                    zp[i] = z0[i] + h / hp * (z0[i] - p1.z[i]);
                }
                err_const = h / (2.0 * h + hp);
            }
        } else {
            let f = eval(sys, z0);
            for &i in &self.diff {
                zp[i] = z0[i] + h * f[i];
            }
            err_const = 0.5;
        }

        // z' ≈ (a0 z + hist) / h
        let (a0, hist): (f64, Vec<f64>) = if order == 2 {
            let p1 = &self.history[0];
            let w = h / (self.t - p1.t);
            let a0 = (1.0 + 2.0 * w) / (1.0 + w);
            let a1 = -(1.0 + w);
            let a2 = w * w / (1.0 + w);
            (a0, (0..n).map(|i| a1 * z0[i] + a2 * p1.z[i]).collect())
        } else {
            (1.0, z0.iter().map(|v| -v).collect())
        };

        if !sys.admissible(&zp) {
            zp.clone_from(z0);
        }
        let mut jac = self.engine.evaluate(sys, &zp);
        self.stats.jacobians += 1;
        for &i in &self.diff {
            jac[(i, i)] -= a0 / h;
        }
        let lu = match ScaledLu::new(jac, &self.var_scales) {
            Ok(lu) => lu,
            Err(e) => return Ok(Attempt::NewtonFailed(e.to_string())),
        };
        self.stats.factorizations += 1;

        let mut z = zp.clone();
        let mut prev_dnorm: f64;
        let mut dnorm = f64::INFINITY;
        for it in 0..=self.cfg.max_newton_iters {
            let mut g = eval(sys, &z);
            for &i in &self.diff {
                g[i] -= (a0 * z[i] + hist[i]) / h;
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Ok(Attempt::NewtonFailed("non-finite residual".into()));
            }
            let (gnorm, _) = scaled_norm(&g, &self.conv_scales, &self.alg);
            if dnorm <= NEWTON_UPDATE_TOL && gnorm <= self.cfg.newton_tol {
                break;
            }
            if it == self.cfg.max_newton_iters {
                return Ok(Attempt::NewtonFailed(format!(
                    "Newton did not converge in {it} iterations (update {dnorm:.2e}, algebraic residual {gnorm:.2e})"
                )));
            }
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let dz = lu.solve(&rhs);
            let w = self.weights(&z);
            prev_dnorm = dnorm;
            dnorm = (dz.iter().zip(&w).map(|(d, w)| (d / w).powi(2)).sum::<f64>() / n as f64).sqrt();
            for i in 0..n {
                z[i] += dz[i];
            }
            self.stats.newton_iters += 1;
            if it >= 2 && dnorm > 2.0 * prev_dnorm {
                return Ok(Attempt::NewtonFailed(format!("Newton diverging (update {dnorm:.2e})")));
            }
            if !sys.admissible(&z) {
                return Ok(Attempt::NewtonFailed("Newton iterate left the physical domain".into()));
            }
        }

        let w = self.weights(&z);
        let nd = self.diff.len().max(1) as f64;
        let err = (self
            .diff
            .iter()
            .map(|&i| (err_const * (z[i] - zp[i]) / w[i]).powi(2))
            .sum::<f64>()
            / nd)
            .sqrt();
        Ok(Attempt::Converged { z, err, order })
    }

    fn factor(&self, err: f64, order: usize) -> f64 {
        if err == 0.0 {
            return 2.0;
        }
        (0.9 * err.powf(-1.0 / (order as f64 + 1.0))).clamp(0.2, 2.0)
    }

    fn accept(&mut self, h: f64, z: Vec<f64>) {
        self.history.insert(0, Point { t: self.t, z: std::mem::replace(&mut self.z, z) });
        self.history.truncate(2);
        self.t += h;
        self.stats.steps += 1;
    }

    /// One step of exactly `h` without error control.
    pub fn step_fixed(&mut self, h: f64) -> Result<()> {
        match self.attempt(h)? {
            Attempt::Converged { z, .. } => {
                self.accept(h, z);
                Ok(())
            }
            Attempt::NewtonFailed(reason) => Err(Error::Integration { t: self.t, h, reason }),
        }
    }

    /// One accepted step of at most `h_cap`; returns the step taken.
    pub fn step(&mut self, h_cap: f64) -> Result<f64> {
        let mut h = self.h.min(h_cap).min(self.cfg.max_step);
        loop {
            if h < self.cfg.min_step {
                return Err(Error::Integration { t: self.t, h, reason: "step size below minimum".into() });
            }
            match self.attempt(h)? {
                Attempt::Converged { z, err, order } if err <= 1.0 => {
                    self.accept(h, z);
                    let next = h * self.factor(err, order);
                    // a step clipped by an output time does not shrink the controller's step
                    self.h = if h < self.h { self.h.max(next) } else { next };
                    self.h = self.h.min(self.cfg.max_step);
                    return Ok(h);
                }
                Attempt::Converged { err, order, .. } => {
                    self.stats.rejected += 1;
                    h *= self.factor(err, order).min(0.9);
                }
                Attempt::NewtonFailed(reason) => {
                    self.stats.rejected += 1;
                    log::debug!("t = {:.6}: {reason}; halving h = {h:.3e}", self.t);
                    h *= 0.5;
                    if h < self.cfg.min_step {
                        return Err(Error::Integration { t: self.t, h, reason });
                    }
                }
            }
        }
    }

    /// Integrates to `t_end`, landing exactly on every time in `stops`.
    /// `on_point` sees each stop (or every step when `stops` is empty).
    pub fn advance(&mut self, t_end: f64, stops: &[f64], mut on_point: impl FnMut(f64, &[f64])) -> Result<()> {
        let t_start = self.t;
        let mut next_stop = stops.iter().copied().filter(move |s| *s > t_start).peekable();
        let scale = t_end.abs().max(1.0);
        while t_end - self.t > 1e-12 * scale {
            if self.stats.steps >= self.cfg.max_steps {
                return Err(Error::Integration { t: self.t, h: self.h, reason: "step budget exhausted".into() });
            }
            let target = match next_stop.peek() {
                Some(s) if *s < t_end => *s,
                _ => t_end,
            };
            let mut cap = target - self.t;
            // avoid leaving a sliver before the target
            if self.h < cap && cap < 1.5 * self.h {
                cap *= 0.5;
            }
            self.step(cap)?;
            if (target - self.t).abs() <= 1e-12 * scale {
                self.t = target;
                if next_stop.peek().is_some_and(|s| (*s - target).abs() <= 1e-12 * scale) {
                    next_stop.next();
                    on_point(self.t, &self.z);
                }
            } else if stops.is_empty() {
                on_point(self.t, &self.z);
            }
        }
        Ok(())
    }
}

/// Integrates a system with fixed inputs from a consistent or nearly
/// consistent state. The state is sampled at `samples` (or every step if
/// empty); `t0` is included when listed.
pub fn integrate<D: DaeSystem>(
    sys: &D,
    z0: Vec<f64>,
    t0: f64,
    t1: f64,
    samples: &[f64],
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let engine = JacobianEngine::new(sys, &z0, cfg.jacobian);
    let mut integ = Integrator::new(sys, engine, t0, z0, *cfg);
    integ.initialize()?;
    let mut traj = Trajectory::default();
    if samples.is_empty() || samples.iter().any(|s| (*s - t0).abs() < 1e-12) {
        traj.t.push(t0);
        traj.z.push(integ.z.clone());
    }
    integ.advance(t1, samples, |t, z| {
        traj.t.push(t);
        traj.z.push(z.to_vec());
    })?;
    traj.stats = integ.stats;
    Ok(traj)
}

/// Integrates a system with piecewise-constant inputs, re-initializing the
/// algebraic variables at every input discontinuity.
pub fn simulate<D: DaeSystem + Piecewise>(
    sys: &mut D,
    z0: Vec<f64>,
    t0: f64,
    t1: f64,
    samples: &[f64],
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    sys.activate(t0);
    let mut engine = JacobianEngine::new(sys, &z0, cfg.jacobian);
    let mut traj = Trajectory::default();
    let mut stats = SolverStats::default();
    let mut z = z0;
    let mut t = t0;
    let mut h = cfg.initial_step;
    let mut breaks: Vec<f64> = sys.breakpoints().into_iter().filter(|b| *b > t0 && *b < t1).collect();
    breaks.push(t1);
    let mut first = true;
    for seg_end in breaks {
        sys.activate(t);
        let mut integ = Integrator::new(&*sys, engine, t, z, *cfg);
        integ.h = h;
        integ.initialize()?;
        if first && (samples.is_empty() || samples.iter().any(|s| (*s - t0).abs() < 1e-12)) {
            traj.t.push(t);
            traj.z.push(integ.z.clone());
        }
        first = false;
        integ.advance(seg_end, samples, |t, z| {
            traj.t.push(t);
            traj.z.push(z.to_vec());
        })?;
        let s = integ.stats;
        stats.steps += s.steps;
        stats.rejected += s.rejected;
        stats.newton_iters += s.newton_iters;
        stats.jacobians += s.jacobians;
        stats.factorizations += s.factorizations;
        t = integ.t;
        h = integ.h;
        z = integ.z;
        engine = integ.engine;
    }
    traj.stats = stats;
    Ok(traj)
}

/// Solves f = 0, g = 0. Falls back to pseudo-transient continuation
/// (integrate, then retry Newton) when plain Newton fails.
pub fn steady_state<D: DaeSystem>(sys: &D, guess: Vec<f64>, cfg: &SolverConfig, tol: f64) -> Result<(Vec<f64>, usize)> {
    cfg.validate()?;
    if !sys.admissible(&guess) {
        return Err(Error::Input("steady-state guess outside the physical domain".into()));
    }
    let engine = JacobianEngine::new(sys, &guess, cfg.jacobian);
    let all: Vec<usize> = (0..sys.n()).collect();
    let mut stats = SolverStats::default();
    let mut z = guess;
    let mut total = 0;
    let mut t = 0.0;
    for round in 0..12 {
        let mut trial = z.clone();
        match damped_newton(sys, &engine, &mut trial, &all, tol, cfg.max_init_iters, &mut stats) {
            Ok(it) => return Ok((trial, total + it)),
            Err((it, _, _)) => total += it,
        }
        let span = 10.0 * (round + 1) as f64;
        let mut integ = Integrator::new(sys, engine.clone(), t, z.clone(), *cfg);
        if integ.initialize().is_err() {
            break;
        }
        if integ.advance(t + span, &[], |_, _| {}).is_err() {
            break;
        }
        t = integ.t;
        z = integ.z;
    }
    let r = eval(sys, &z);
    let scales = convergence_scales(sys);
    let diff: Vec<usize> = (0..sys.n()).filter(|i| sys.differential()[*i]).collect();
    let alg: Vec<usize> = (0..sys.n()).filter(|i| !sys.differential()[*i]).collect();
    Err(Error::SteadyState { f_norm: scaled_norm(&r, &scales, &diff).0, g_norm: scaled_norm(&r, &scales, &alg).0 })
}
