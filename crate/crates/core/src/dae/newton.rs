use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{eval, DaeSystem, JacobianEngine, JacobianMode};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[serde(rename = "be")]
    ImplicitEuler,
    #[default]
    Bdf2,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "be" | "implicit-euler" => Ok(Method::ImplicitEuler),
            "bdf2" => Ok(Method::Bdf2),
            other => Err(Error::Config(format!("unknown integration method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::ImplicitEuler => "be",
            Method::Bdf2 => "bdf2",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub rel_tol: f64,
    /// Absolute tolerance, multiplied by each variable's scale.
    pub abs_tol: f64,
    /// Bound on the scaled algebraic residual at accepted points.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Iteration budget of consistent initialization and steady-state solves.
    pub max_init_iters: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
    pub method: Method,
    pub jacobian: JacobianMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tol: 1e-6,
            abs_tol: 1e-8,
            newton_tol: 1e-9,
            max_newton_iters: 10,
            max_init_iters: 60,
            initial_step: 1e-4,
            min_step: 1e-12,
            max_step: 1.0,
            max_steps: 1_000_000,
            method: Method::Bdf2,
            jacobian: JacobianMode::Analytic,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.rel_tol, self.abs_tol, self.newton_tol, self.initial_step, self.min_step, self.max_step];
        if pos.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("solver tolerances and step bounds must be positive".into()));
        }
        if self.min_step > self.max_step {
            return Err(Error::Config("solver min_step exceeds max_step".into()));
        }
        if self.max_newton_iters == 0 || self.max_init_iters == 0 {
            return Err(Error::Config("solver iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Work counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub steps: usize,
    pub rejected: usize,
    pub newton_iters: usize,
    pub jacobians: usize,
    pub factorizations: usize,
}

/// LU factorization of a row- and column-equilibrated matrix.
pub struct ScaledLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    row: Vec<f64>,
    col: Vec<f64>,
}

impl ScaledLu {
    /// Factors `m`, with `col_scale` the typical magnitude of each unknown.
    pub fn new(mut m: DMatrix<f64>, col_scale: &[f64]) -> Result<Self> {
        let n = m.nrows();
        for j in 0..n {
            m.column_mut(j).scale_mut(col_scale[j]);
        }
        let mut row = vec![1.0; n];
        for i in 0..n {
            let mx = m.row(i).amax();
            if !mx.is_finite() {
                return Err(Error::Singularity(format!("non-finite Jacobian entry in row {i}")));
            }
            if mx == 0.0 {
                return Err(Error::Singularity(format!("Jacobian row {i} is identically zero")));
            }
            row[i] = 1.0 / mx;
            m.row_mut(i).scale_mut(row[i]);
        }
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::Singularity("singular iteration matrix".into()));
        }
        Ok(ScaledLu { lu, row, col: col_scale.to_vec() })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = DVector::from_iterator(rhs.len(), rhs.iter().zip(&self.row).map(|(r, s)| r * s));
        let x = self.lu.solve(&b).expect("factorization checked invertible");
        x.iter().zip(&self.col).map(|(x, s)| x * s).collect()
    }
}

/// Scaled infinity norm over a row subset, with the worst row.
pub fn scaled_norm(r: &[f64], scales: &[f64], rows: &[usize]) -> (f64, usize) {
    let mut worst = (0.0, rows.first().copied().unwrap_or(0));
    for &i in rows {
        let v = (r[i] / scales[i]).abs();
        if !(v <= worst.0) {
            worst = (v, i);
        }
    }
    worst
}

fn sub_matrix(j: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| j[(idx[a], idx[b])])
}

/// Row scales used for convergence checks: algebraic rows use the system's
/// residual scales, differential rows the variable scales (per second).
pub fn convergence_scales<D: DaeSystem>(sys: &D) -> Vec<f64> {
    let vs = sys.var_scales();
    let rs = sys.res_scales();
    sys.differential().iter().enumerate().map(|(i, d)| if *d { vs[i] } else { rs[i] }).collect()
}

/// Damped Newton on the rows and variables in `idx`, the remaining
/// variables held fixed. Returns the number of iterations.
pub fn damped_newton<D: DaeSystem>(
    sys: &D,
    engine: &JacobianEngine,
    z: &mut [f64],
    idx: &[usize],
    tol: f64,
    max_iters: usize,
    stats: &mut SolverStats,
) -> std::result::Result<usize, (usize, f64, usize)> {
    let scales = convergence_scales(sys);
    let vs = sys.var_scales();
    let col_scale: Vec<f64> = idx.iter().map(|i| vs[*i]).collect();
    let mut r = eval(sys, z);
    let (mut norm, mut worst) = scaled_norm(&r, &scales, idx);
    let merit = |r: &[f64]| idx.iter().map(|i| (r[*i] / scales[*i]).powi(2)).sum::<f64>();
    for it in 0..max_iters {
        if norm <= tol {
            return Ok(it);
        }
        let jac = engine.evaluate(sys, z);
        stats.jacobians += 1;
        let lu = match ScaledLu::new(sub_matrix(&jac, idx), &col_scale) {
            Ok(lu) => lu,
            Err(_) => return Err((it, norm, worst)),
        };
        stats.factorizations += 1;
        let rhs: Vec<f64> = idx.iter().map(|i| -r[*i]).collect();
        let dx = lu.solve(&rhs);
        let m0 = merit(&r);
        let mut lambda = 1.0;
        let mut trial = z.to_vec();
        let mut accepted = false;
        for _ in 0..30 {
            for (k, &i) in idx.iter().enumerate() {
                trial[i] = z[i] + lambda * dx[k];
            }
            if sys.admissible(&trial) {
                let rt = eval(sys, &trial);
                let mt = merit(&rt);
                if mt.is_finite() && (mt <= (1.0 - 1e-4 * lambda) * m0 || lambda < 1e-3 && mt < m0) {
                    z.copy_from_slice(&trial);
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        stats.newton_iters += 1;
        if !accepted {
            return Err((it + 1, norm, worst));
        }
        (norm, worst) = scaled_norm(&r, &scales, idx);
    }
    if norm <= tol {
        Ok(max_iters)
    } else {
        Err((max_iters, norm, worst))
    }
}

/// Solves g(x, y) = 0 for the algebraic variables with x held fixed.
/// Returns the iteration count.
pub fn consistent_init<D: DaeSystem>(
    sys: &D,
    engine: &JacobianEngine,
    z: &mut [f64],
    cfg: &SolverConfig,
    stats: &mut SolverStats,
) -> Result<usize> {
    if !sys.admissible(z) {
        return Err(Error::Input("initial guess outside the physical domain (non-positive temperature or pressure)".into()));
    }
    let alg: Vec<usize> = (0..sys.n()).filter(|i| !sys.differential()[*i]).collect();
    damped_newton(sys, engine, z, &alg, cfg.newton_tol, cfg.max_init_iters, stats).map_err(
        |(iterations, value, worst)| Error::Initialization { iterations, worst: sys.var_name(worst), value },
    )
}

/// Convenience wrapper building a Jacobian engine on the fly.
pub fn consistent_init_simple<D: DaeSystem>(sys: &D, z: &mut [f64], cfg: &SolverConfig) -> Result<usize> {
    let engine = JacobianEngine::new(sys, z, cfg.jacobian);
    consistent_init(sys, &engine, z, cfg, &mut SolverStats::default())
}
