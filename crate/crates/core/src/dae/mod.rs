//! Semi-explicit index-1 DAE machinery: Jacobians, Newton, consistent
//! initialization, implicit time stepping and steady-state solving.
//!
//! A system is written as one residual vector `F(z)` over the stacked
//! variables `z`. Rows flagged as differential hold `f` (so that
//! `dz_i/dt = F_i(z)`); the remaining rows hold the algebraic constraints
//! `0 = g(z)`. Row `i` is paired with variable `i`.

mod integrator;
mod jacobian;
mod newton;

pub use integrator::*;
pub use jacobian::*;
pub use newton::*;

use crate::scalar::Scalar;

pub trait DaeSystem {
    /// Number of variables (and residual rows).
    fn n(&self) -> usize;

    /// `true` for differential variables.
    fn differential(&self) -> &[bool];

    /// Residual evaluation: `f` in differential rows, `g` in algebraic rows.
    fn residual<S: Scalar>(&self, z: &[S], out: &mut [S]);

    /// Typical magnitude of each variable, used for Newton weighting,
    /// finite-difference steps and error control.
    fn var_scales(&self) -> Vec<f64> {
        vec![1.0; self.n()]
    }

    /// Size of a meaningful change of each variable. Central-difference
    /// steps are ∛eps times this.
    fn fd_scales(&self) -> Vec<f64> {
        self.var_scales()
    }

    /// Typical magnitude of each residual row.
    fn res_scales(&self) -> Vec<f64> {
        vec![1.0; self.n()]
    }

    fn var_name(&self, i: usize) -> String {
        format!("z[{i}]")
    }

    /// Rejects states outside the physical domain (negative temperature, ...).
    fn admissible(&self, _z: &[f64]) -> bool {
        true
    }
}

pub fn eval<D: DaeSystem>(sys: &D, z: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; sys.n()];
    sys.residual(z, &mut out);
    out
}

/// Scaled infinity norm of the algebraic rows, with the index of the worst.
pub fn algebraic_norm<D: DaeSystem>(sys: &D, z: &[f64]) -> (f64, usize) {
    let r = eval(sys, z);
    let scales = sys.res_scales();
    let mut worst = (0.0, 0);
    for (i, d) in sys.differential().iter().enumerate() {
        if !*d {
            let v = (r[i] / scales[i]).abs();
            if !(v <= worst.0) {
                worst = (v, i);
            }
        }
    }
    worst
}

/// Scaled infinity norm of the differential rows.
pub fn differential_norm<D: DaeSystem>(sys: &D, z: &[f64]) -> f64 {
    let r = eval(sys, z);
    let scales = sys.var_scales();
    let mut worst: f64 = 0.0;
    for (i, d) in sys.differential().iter().enumerate() {
        if *d {
            let v = (r[i] / scales[i]).abs();
            worst = if v.is_nan() { f64::NAN } else { worst.max(v) };
        }
    }
    worst
}
