use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::DaeSystem;
use crate::error::{Error, Result};
use crate::scalar::{Dual, Scalar, Trace};

/// Directions propagated per forward-mode sweep.
pub const AD_LANES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JacobianMode {
    #[default]
    Analytic,
    #[serde(rename = "fd")]
    FiniteDifference,
}

impl std::str::FromStr for JacobianMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(JacobianMode::Analytic),
            "fd" | "finite-difference" => Ok(JacobianMode::FiniteDifference),
            other => Err(Error::Config(format!("unknown Jacobian mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for JacobianMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            JacobianMode::Analytic => "analytic",
            JacobianMode::FiniteDifference => "fd",
        })
    }
}

/// Structural nonzeros of ∂F/∂z.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub n: usize,
    /// Column indices per row, sorted.
    pub rows: Vec<Vec<usize>>,
    /// Row indices per column, sorted.
    pub cols: Vec<Vec<usize>>,
}

impl Pattern {
    /// Detects the pattern by propagating dependency sets through the
    /// residual at `z`.
    pub fn detect<D: DaeSystem>(sys: &D, z: &[f64]) -> Pattern {
        let n = sys.n();
        let zt: Vec<Trace> = z.iter().enumerate().map(|(i, v)| Trace::variable(*v, i)).collect();
        let mut out = vec![Trace::cst(0.0); n];
        sys.residual(&zt, &mut out);
        let rows: Vec<Vec<usize>> = out.iter().map(|t| t.deps().iter().map(|d| *d as usize).collect()).collect();
        let mut cols = vec![Vec::new(); n];
        for (r, deps) in rows.iter().enumerate() {
            for &c in deps {
                cols[c].push(r);
            }
        }
        Pattern { n, rows, cols }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.rows[r].binary_search(&c).is_ok()
    }

    /// Greedy distance-2 column coloring: columns sharing a row get
    /// different colors.
    pub fn coloring(&self) -> Vec<usize> {
        let mut color = vec![usize::MAX; self.n];
        let mut mark = Vec::new();
        for j in 0..self.n {
            mark.clear();
            for &r in &self.cols[j] {
                for &k in &self.rows[r] {
                    if color[k] != usize::MAX {
                        mark.push(color[k]);
                    }
                }
            }
            mark.sort_unstable();
            mark.dedup();
            let mut c = 0;
            for &m in &mark {
                if m == c {
                    c += 1;
                } else if m > c {
                    break;
                }
            }
            color[j] = c;
        }
        color
    }

    /// Character plot of the pattern, `#` for a nonzero.
    pub fn spy(&self) -> String {
        let mut s = String::with_capacity(self.n * (self.n + 1));
        for r in 0..self.n {
            let mut line = vec![b'.'; self.n];
            for &c in &self.rows[r] {
                line[c] = b'#';
            }
            s.push_str(std::str::from_utf8(&line).expect("ascii"));
            s.push('\n');
        }
        s
    }
}

/// Jacobian evaluator bound to one system's sparsity structure.
#[derive(Clone, Debug)]
pub struct JacobianEngine {
    pub mode: JacobianMode,
    pub pattern: Pattern,
    pub colors: Vec<usize>,
    pub ncolors: usize,
    /// Test hook: adds a value to one analytic entry.
    pub fault: Option<(usize, usize, f64)>,
}

impl JacobianEngine {
    pub fn new<D: DaeSystem>(sys: &D, z: &[f64], mode: JacobianMode) -> Self {
        let pattern = Pattern::detect(sys, z);
        let colors = pattern.coloring();
        let ncolors = colors.iter().map(|c| c + 1).max().unwrap_or(0);
        JacobianEngine { mode, pattern, colors, ncolors, fault: None }
    }

    pub fn evaluate<D: DaeSystem>(&self, sys: &D, z: &[f64]) -> DMatrix<f64> {
        match self.mode {
            JacobianMode::Analytic => self.analytic(sys, z),
            JacobianMode::FiniteDifference => forward_difference(sys, z),
        }
    }

    /// Exact Jacobian by colored forward-mode differentiation.
    pub fn analytic<D: DaeSystem>(&self, sys: &D, z: &[f64]) -> DMatrix<f64> {
        let n = sys.n();
        let mut jac = DMatrix::zeros(n, n);
        let mut zd: Vec<Dual<AD_LANES>> = vec![Dual::constant(0.0); n];
        let mut out: Vec<Dual<AD_LANES>> = vec![Dual::constant(0.0); n];
        let mut batch = 0;
        while batch * AD_LANES < self.ncolors {
            let lo = batch * AD_LANES;
            let lane = |j: usize| {
                let c = self.colors[j];
                (c >= lo && c < lo + AD_LANES).then(|| c - lo)
            };
            for j in 0..n {
                zd[j] = Dual::variable(z[j], lane(j));
            }
            sys.residual(&zd, &mut out);
            for j in 0..n {
                if let Some(l) = lane(j) {
                    for &r in &self.pattern.cols[j] {
                        jac[(r, j)] = out[r].d[l];
                    }
                }
            }
            batch += 1;
        }
        if let Some((r, c, v)) = self.fault {
            jac[(r, c)] += v;
        }
        jac
    }

    pub fn ad_sweeps(&self) -> usize {
        self.ncolors.div_ceil(AD_LANES)
    }
}

fn fd_step(z: f64, scale: f64, base: f64) -> f64 {
    let h = base * z.abs().max(scale);
    // make the step exactly representable
    (z + h) - z
}

/// Dense one-sided differences, one residual evaluation per column.
pub fn forward_difference<D: DaeSystem>(sys: &D, z: &[f64]) -> DMatrix<f64> {
    let n = sys.n();
    let scales = sys.var_scales();
    let mut f0 = vec![0.0; n];
    sys.residual(z, &mut f0);
    let mut jac = DMatrix::zeros(n, n);
    let mut zp = z.to_vec();
    let mut f1 = vec![0.0; n];
    for j in 0..n {
        let h = fd_step(z[j], scales[j], f64::EPSILON.sqrt());
        zp[j] = z[j] + h;
        sys.residual(&zp, &mut f1);
        for r in 0..n {
            jac[(r, j)] = (f1[r] - f0[r]) / h;
        }
        zp[j] = z[j];
    }
    jac
}

/// Dense central differences with Ridders' extrapolation: steps shrink
/// geometrically from a hundredth of the variable's finite-difference scale and
/// each entry keeps the estimate with the smallest error.
pub fn central_difference<D: DaeSystem>(sys: &D, z: &[f64]) -> DMatrix<f64> {
    const NTAB: usize = 14;
    const CON: f64 = 2.0;
    const SAFE: f64 = 2.0;
    let n = sys.n();
    let scales = sys.fd_scales();
    let mut jac = DMatrix::zeros(n, n);
    let mut zp = z.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    let mut tab = vec![[[0.0; NTAB]; NTAB]; n];
    let mut err = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    for j in 0..n {
        err.fill(f64::INFINITY);
        done.fill(false);
        let mut hh = 0.01 * scales[j];
        for i in 0..NTAB {
            if i > 0 {
                hh /= CON;
            }
            let h = (z[j] + hh) - z[j];
            zp[j] = z[j] + h;
            sys.residual(&zp, &mut fp);
            zp[j] = z[j] - h;
            sys.residual(&zp, &mut fm);
            for r in 0..n {
                if done[r] {
                    continue;
                }
                let a = &mut tab[r];
                a[0][i] = (fp[r] - fm[r]) / (2.0 * h);
                let mut fac = CON * CON;
                for k in 1..=i {
                    a[k][i] = (a[k - 1][i] * fac - a[k - 1][i - 1]) / (fac - 1.0);
                    fac *= CON * CON;
                    let e = (a[k][i] - a[k - 1][i]).abs().max((a[k][i] - a[k - 1][i - 1]).abs());
                    if e <= err[r] {
                        err[r] = e;
                        jac[(r, j)] = a[k][i];
                    }
                }
                if i > 0 && (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * err[r] {
                    done[r] = true;
                }
            }
        }
        zp[j] = z[j];
    }
    jac
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobianCheck {
    pub max_discrepancy: f64,
    pub worst_row: usize,
    pub worst_col: usize,
    pub analytic: f64,
    pub finite_difference: f64,
    /// Entries nonzero in the finite-difference Jacobian but absent from the
    /// declared pattern.
    pub missing_from_pattern: usize,
}

impl JacobianCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_discrepancy < tol && self.missing_from_pattern == 0
    }

    pub fn describe<D: DaeSystem>(&self, sys: &D) -> String {
        format!(
            "d(res {})/d({}) analytic {:.6e} vs fd {:.6e}",
            sys.var_name(self.worst_row),
            sys.var_name(self.worst_col),
            self.analytic,
            self.finite_difference
        )
    }

    pub fn into_result<D: DaeSystem>(self, sys: &D, tol: f64) -> Result<Self> {
        if self.passed(tol) {
            Ok(self)
        } else {
            Err(Error::JacobianCheck { max: self.max_discrepancy, worst: self.describe(sys) })
        }
    }
}

/// Compares the analytic Jacobian with central differences. The relative
/// discrepancy of an entry is |a − f| / max(|a|, |f|, 1e-4 · row max / s_c),
/// where the row max is taken over entries multiplied by the variable
/// scales s_c.
/// Entries below this fraction of their scaled row maximum are compared in
/// absolute terms.
pub const CHECK_FLOOR: f64 = 1e-4;

pub fn jacobian_check<D: DaeSystem>(sys: &D, engine: &JacobianEngine, z: &[f64]) -> JacobianCheck {
    let a = engine.analytic(sys, z);
    let f = central_difference(sys, z);
    compare(&a, &f, &engine.pattern, &sys.var_scales())
}

pub fn compare(a: &DMatrix<f64>, f: &DMatrix<f64>, pattern: &Pattern, col_scales: &[f64]) -> JacobianCheck {
    let n = a.nrows();
    let mut out = JacobianCheck {
        max_discrepancy: 0.0,
        worst_row: 0,
        worst_col: 0,
        analytic: 0.0,
        finite_difference: 0.0,
        missing_from_pattern: 0,
    };
    for r in 0..n {
        let mut row_max: f64 = 0.0;
        for c in 0..n {
            row_max = row_max.max(a[(r, c)].abs().max(f[(r, c)].abs()) * col_scales[c]);
        }
        for c in 0..n {
            let (av, fv) = (a[(r, c)], f[(r, c)]);
            let floor = CHECK_FLOOR * row_max / col_scales[c];
            let den = av.abs().max(fv.abs()).max(floor);
            if den == 0.0 {
                continue;
            }
            let d = (av - fv).abs() / den;
            if fv != 0.0 && !pattern.contains(r, c) && fv.abs() > floor {
                out.missing_from_pattern += 1;
            }
            if !(d <= out.max_discrepancy) {
                out = JacobianCheck {
                    max_discrepancy: d,
                    worst_row: r,
                    worst_col: c,
                    analytic: av,
                    finite_difference: fv,
                    ..out
                };
            }
        }
    }
    out
}
