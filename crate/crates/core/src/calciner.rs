//! Finite-volume plug-flow calciner.
//!
//! Per cell: five concentrations and the two volumetric internal energies
//! are differential; the phase temperatures and the pressure are algebraic.

use serde::{Deserialize, Serialize};

use crate::dae::DaeSystem;
use crate::error::{Error, Result};
use crate::kinetics::KineticParams;
use crate::scalar::{rdiv, Scalar};
use crate::thermo::{
    nonneg, suspension_viscosity, MolarVector, Phase, Thermo, AIR, B, NSPECIES, R_GAS,
};

/// Variables per calciner cell: c (5), û_s, û_g, T_s, T_g, P.
pub const CELL_VARS: usize = 10;
pub const J_US: usize = 5;
pub const J_UG: usize = 6;
pub const J_TS: usize = 7;
pub const J_TG: usize = 8;
pub const J_P: usize = 9;

/// Regularization width of the sign function in the Darcy law [Pa/m].
pub const DARCY_SIGN_EPS: f64 = 1.0;
const DARCY_ABS_EPS2: f64 = 1e-20;
/// Gas velocity above which the incompressible Darcy law is out of range.
pub const MACH_LIMIT_VELOCITY: f64 = 0.2 * 340.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariableOrdering {
    #[default]
    ByCell,
    BySpecies,
}

impl std::str::FromStr for VariableOrdering {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "by-cell" => Ok(VariableOrdering::ByCell),
            "by-species" => Ok(VariableOrdering::BySpecies),
            other => Err(Error::Config(format!("unknown variable ordering '{other}'"))),
        }
    }
}

impl std::fmt::Display for VariableOrdering {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VariableOrdering::ByCell => "by-cell",
            VariableOrdering::BySpecies => "by-species",
        })
    }
}

/// Placement of the calciner block inside a larger variable vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellLayout {
    pub base: usize,
    pub nz: usize,
    pub ordering: VariableOrdering,
}

impl CellLayout {
    /// Index of quantity `j` (0..CELL_VARS) of cell `i`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        match self.ordering {
            VariableOrdering::ByCell => self.base + i * CELL_VARS + j,
            VariableOrdering::BySpecies => self.base + j * self.nz + i,
        }
    }

    pub fn len(&self) -> usize {
        self.nz * CELL_VARS
    }

    pub fn is_empty(&self) -> bool {
        self.nz == 0
    }

    pub fn read<S: Scalar>(&self, z: &[S]) -> Vec<Cell<S>> {
        (0..self.nz)
            .map(|i| Cell {
                c: std::array::from_fn(|j| z[self.idx(i, j)]),
                u_s: z[self.idx(i, J_US)],
                u_g: z[self.idx(i, J_UG)],
                t_s: z[self.idx(i, J_TS)],
                t_g: z[self.idx(i, J_TG)],
                p: z[self.idx(i, J_P)],
            })
            .collect()
    }

    pub fn write(&self, cells: &[Cell<f64>], z: &mut [f64]) {
        for (i, cell) in cells.iter().enumerate() {
            for j in 0..NSPECIES {
                z[self.idx(i, j)] = cell.c[j];
            }
            z[self.idx(i, J_US)] = cell.u_s;
            z[self.idx(i, J_UG)] = cell.u_g;
            z[self.idx(i, J_TS)] = cell.t_s;
            z[self.idx(i, J_TG)] = cell.t_g;
            z[self.idx(i, J_P)] = cell.p;
        }
    }

    /// Scatters the per-cell derivatives and algebraic residuals.
    pub fn scatter<S: Scalar>(&self, ev: &CalcinerEval<S>, out: &mut [S]) {
        for i in 0..self.nz {
            for j in 0..NSPECIES {
                out[self.idx(i, j)] = ev.dc[i][j];
            }
            out[self.idx(i, J_US)] = ev.du_s[i];
            out[self.idx(i, J_UG)] = ev.du_g[i];
            out[self.idx(i, J_TS)] = ev.alg[i][0];
            out[self.idx(i, J_TG)] = ev.alg[i][1];
            out[self.idx(i, J_P)] = ev.alg[i][2];
        }
    }

    pub fn fill_scales(&self, var: &mut [f64], res: &mut [f64]) {
        for i in 0..self.nz {
            for j in 0..CELL_VARS {
                let k = self.idx(i, j);
                (var[k], res[k]) = match j {
                    J_US | J_UG => (1e6, 1e6),
                    J_TS | J_TG => (1.0, 1e6),
                    J_P => (1e5, 1.0),
                    _ => (1.0, 1.0),
                };
            }
        }
    }

    pub fn fill_differential(&self, mask: &mut [bool]) {
        for i in 0..self.nz {
            for j in 0..CELL_VARS {
                mask[self.idx(i, j)] = j < J_TS;
            }
        }
    }

    pub fn var_name(&self, k: usize) -> Option<String> {
        const NAMES: [&str; CELL_VARS] =
            ["c_AB2", "c_A", "c_B", "c_air", "c_Q", "u_s", "u_g", "T_s", "T_g", "P"];
        if k < self.base || k >= self.base + self.len() {
            return None;
        }
        let r = k - self.base;
        let (i, j) = match self.ordering {
            VariableOrdering::ByCell => (r / CELL_VARS, r % CELL_VARS),
            VariableOrdering::BySpecies => (r % self.nz, r / self.nz),
        };
        Some(format!("calciner[{}].{}", i + 1, NAMES[j]))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalcinerParams {
    /// Length L [m].
    pub length: f64,
    /// Diameter d [m].
    pub diameter: f64,
    pub nz: usize,
    /// Diffusion coefficients [m²/s].
    pub d_diff: MolarVector,
    /// Median particle diameter [m].
    pub d_med: f64,
    /// Solid-gas heat transfer coefficient [W/(m² K)].
    pub k_sg: f64,
    /// Volumetric ambient loss [W/m³], subtracted from both phases.
    pub q_amb: f64,
    pub darcy_sign_eps: f64,
}

impl Default for CalcinerParams {
    fn default() -> Self {
        CalcinerParams {
            length: 12.0,
            diameter: 0.18,
            nz: 10,
            d_diff: [0.1; NSPECIES],
            d_med: 7.61e-6,
            k_sg: 200.0,
            q_amb: 0.0,
            darcy_sign_eps: DARCY_SIGN_EPS,
        }
    }
}

impl CalcinerParams {
    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.diameter * self.diameter / 4.0
    }

    pub fn dz(&self) -> f64 {
        self.length / self.nz as f64
    }

    pub fn volume(&self) -> f64 {
        self.area() * self.length
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.diameter > 0.0) {
            return Err(Error::Config("calciner length and diameter must be positive".into()));
        }
        if self.nz < 2 {
            return Err(Error::Config(format!("calciner needs at least 2 cells, got {}", self.nz)));
        }
        if self.d_diff.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::Config("diffusion coefficients must be non-negative".into()));
        }
        if !(self.d_med > 0.0 && self.k_sg >= 0.0 && self.q_amb >= 0.0 && self.darcy_sign_eps > 0.0) {
            return Err(Error::Config("invalid calciner transport parameters".into()));
        }
        Ok(())
    }
}

/// One calciner cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell<S> {
    pub c: MolarVector<S>,
    pub u_s: S,
    pub u_g: S,
    pub t_s: S,
    pub t_g: S,
    pub p: S,
}

impl Cell<f64> {
    /// Builds a cell with internal energies consistent with (T_s, T_g, P, c).
    pub fn consistent(thermo: &Thermo, c: MolarVector, t_s: f64, t_g: f64, p: f64) -> Self {
        Cell {
            c,
            u_s: thermo.phase_internal_energy(Phase::Solid, t_s, p, &c),
            u_g: thermo.phase_internal_energy(Phase::Gas, t_g, p, &c),
            t_s,
            t_g,
            p,
        }
    }

    /// Fills the gas share of `c_solid` so that the volume closure holds,
    /// with water mole fraction `x_b` in the gas.
    pub fn fill_gas(thermo: &Thermo, mut c: MolarVector, x_b: f64, t_s: f64, t_g: f64, p: f64) -> MolarVector {
        let vs = thermo.phase_volume(Phase::Solid, t_s, p, &c);
        let cg = (1.0 - vs) * p / (R_GAS * t_g);
        c[B] = x_b * cg;
        c[AIR] = (1.0 - x_b) * cg;
        c
    }
}

/// Inlet and outlet conditions.
#[derive(Clone, Copy, Debug)]
pub struct CalcinerBoundary<S> {
    pub p_in: S,
    /// Downstream pressure; `None` closes the outlet.
    pub p_out: Option<S>,
    /// Inlet molar flows [mol/s].
    pub f_in: MolarVector<S>,
    /// Enthalpy flows carried by the inlet solid and gas [W].
    pub h_s_in: S,
    pub h_g_in: S,
}

impl<S: Scalar> CalcinerBoundary<S> {
    pub fn from_streams(
        thermo: &Thermo,
        f_in: MolarVector<S>,
        t_s_in: S,
        t_g_in: S,
        p_in: S,
        p_out: Option<S>,
    ) -> Self {
        CalcinerBoundary {
            p_in,
            p_out,
            f_in,
            h_s_in: thermo.phase_enthalpy(Phase::Solid, t_s_in, p_in, &f_in),
            h_g_in: thermo.phase_enthalpy(Phase::Gas, t_g_in, p_in, &f_in),
        }
    }

    pub fn closed(p_in: S) -> Self {
        CalcinerBoundary {
            p_in,
            p_out: None,
            f_in: [S::zero(); NSPECIES],
            h_s_in: S::zero(),
            h_g_in: S::zero(),
        }
    }
}

/// Darcy-Weisbach velocity from a pressure gradient, without regularization.
/// Positive when pressure falls downstream.
pub fn darcy_velocity(dpdz: f64, rho: f64, mu: f64, d: f64) -> f64 {
    let k = 2.0 / 0.316 * (d.powi(5) / (mu * rho.powi(3))).powf(0.25);
    -(k * dpdz.abs()).powf(4.0 / 7.0) * dpdz.signum() * (dpdz != 0.0) as u8 as f64
}

/// Regularized Darcy-Weisbach velocity used inside the model.
pub fn darcy_velocity_smooth<S: Scalar>(dpdz: S, rho: S, mu: S, d: f64, sign_eps: f64) -> S {
    let k = rdiv(d.powi(5), mu * rho * rho * rho).powf(0.25) * (2.0 / 0.316);
    let g2 = dpdz * dpdz;
    let mag = (k * (g2 + DARCY_ABS_EPS2).sqrt()).powf(4.0 / 7.0);
    let sgn = -dpdz / (g2 + sign_eps * sign_eps).sqrt();
    mag * sgn
}

/// Volumetric solid-gas heat exchange Ĵ_sg [W/m³].
pub fn heat_exchange<S: Scalar>(vhat_s: S, t_g: S, t_s: S, k_sg: f64, d_med: f64) -> S {
    vhat_s * (6.0 * k_sg / d_med) * (t_g - t_s)
}

/// Mixture density, suspension viscosity and solid volume fraction of a cell.
#[derive(Clone, Copy, Debug)]
pub struct CellTransport<S> {
    pub rho: S,
    pub mu: S,
    pub vhat_s: S,
}

pub fn cell_transport<S: Scalar>(thermo: &Thermo, cell: &Cell<S>) -> CellTransport<S> {
    let c = cell.c.map(nonneg);
    let vhat_s = thermo.phase_volume(Phase::Solid, cell.t_s, cell.p, &c);
    let cg = c[B] + c[AIR];
    let safe = S::select(cg.re() > 0.0, cg, S::cst(1.0));
    let x = [c[B] / safe, c[AIR] / safe];
    let x = [S::select(cg.re() > 0.0, x[0], S::zero()), S::select(cg.re() > 0.0, x[1], S::cst(1.0))];
    let mu_g = thermo.gas_viscosity(cell.t_g, x);
    CellTransport {
        rho: thermo.density(&c),
        mu: suspension_viscosity(mu_g, vhat_s),
        vhat_s,
    }
}

/// Everything the calciner contributes to the plant residual.
#[derive(Clone, Debug)]
pub struct CalcinerEval<S> {
    pub dc: Vec<MolarVector<S>>,
    pub du_s: Vec<S>,
    pub du_g: Vec<S>,
    /// Per cell: U_s − û_s, U_g − û_g, V_s + V_g − 1.
    pub alg: Vec<[S; 3]>,
    /// Interface velocities v_{1/2} .. v_{N+1/2} [m/s].
    pub v: Vec<S>,
    /// Interface molar fluxes [mol/(m² s)].
    pub flux: Vec<MolarVector<S>>,
}

impl<S: Scalar> CalcinerEval<S> {
    pub fn v_in(&self) -> S {
        self.v[0]
    }
    pub fn v_out(&self) -> S {
        *self.v.last().expect("at least one interface")
    }
    pub fn flux_out(&self) -> MolarVector<S> {
        *self.flux.last().expect("at least one interface")
    }
}

pub struct Calciner<'a> {
    pub thermo: &'a Thermo,
    pub kinetics: &'a KineticParams,
    pub params: &'a CalcinerParams,
}

impl<'a> Calciner<'a> {
    pub fn new(thermo: &'a Thermo, kinetics: &'a KineticParams, params: &'a CalcinerParams) -> Self {
        Calciner { thermo, kinetics, params }
    }

    /// Per-cell algebraic residuals.
    pub fn algebraic_residuals<S: Scalar>(&self, cell: &Cell<S>) -> [S; 3] {
        let th = self.thermo;
        let c = &cell.c;
        [
            th.phase_internal_energy(Phase::Solid, cell.t_s, cell.p, c) - cell.u_s,
            th.phase_internal_energy(Phase::Gas, cell.t_g, cell.p, c) - cell.u_g,
            th.phase_volume(Phase::Solid, cell.t_s, cell.p, c)
                + th.phase_volume(Phase::Gas, cell.t_g, cell.p, c)
                - 1.0,
        ]
    }

    /// Interface velocities and molar fluxes.
    pub fn interface_fluxes<S: Scalar>(
        &self,
        cells: &[Cell<S>],
        tr: &[CellTransport<S>],
        bnd: &CalcinerBoundary<S>,
    ) -> (Vec<S>, Vec<MolarVector<S>>) {
        let p = self.params;
        let nz = cells.len();
        let dz = p.dz();
        let eps = p.darcy_sign_eps;
        let mut v = Vec::with_capacity(nz + 1);
        let mut flux = Vec::with_capacity(nz + 1);

        let g_in = (cells[0].p - bnd.p_in) / dz;
        v.push(darcy_velocity_smooth(g_in, tr[0].rho, tr[0].mu, p.diameter, eps));
        flux.push(bnd.f_in.map(|f| f / p.area()));

        for i in 0..nz - 1 {
            let g = (cells[i + 1].p - cells[i].p) / dz;
            let fwd = g.re() <= 0.0;
            let rho = S::select(fwd, tr[i].rho, tr[i + 1].rho);
            let mu = S::select(fwd, tr[i].mu, tr[i + 1].mu);
            let vi = darcy_velocity_smooth(g, rho, mu, p.diameter, eps);
            let n = std::array::from_fn(|j| {
                S::select(fwd, cells[i].c[j], cells[i + 1].c[j]) * vi
                    - (cells[i + 1].c[j] - cells[i].c[j]) * (p.d_diff[j] / dz)
            });
            v.push(vi);
            flux.push(n);
        }

        let last = nz - 1;
        match bnd.p_out {
            Some(p_out) => {
                let g = (p_out - cells[last].p) / dz;
                let vo = darcy_velocity_smooth(g, tr[last].rho, tr[last].mu, p.diameter, eps);
                v.push(vo);
                flux.push(cells[last].c.map(|c| c * vo));
            }
            None => {
                v.push(S::zero());
                flux.push([S::zero(); NSPECIES]);
            }
        }
        (v, flux)
    }

    /// Time derivatives, algebraic residuals and interface quantities.
    pub fn evaluate<S: Scalar>(&self, cells: &[Cell<S>], bnd: &CalcinerBoundary<S>) -> CalcinerEval<S> {
        let th = self.thermo;
        let p = self.params;
        let nz = cells.len();
        let dz = p.dz();
        let area = p.area();
        let tr: Vec<CellTransport<S>> = cells.iter().map(|c| cell_transport(th, c)).collect();
        let (v, flux) = self.interface_fluxes(cells, &tr, bnd);

        // enthalpy fluxes [W/m²] at each interface, donor temperature and pressure
        let mut hs = Vec::with_capacity(nz + 1);
        let mut hg = Vec::with_capacity(nz + 1);
        hs.push(bnd.h_s_in / area);
        hg.push(bnd.h_g_in / area);
        for i in 0..nz {
            let n = &flux[i + 1];
            let (ts, tg, pp) = if i + 1 < nz {
                let fwd = v[i + 1].re() >= 0.0;
                (
                    S::select(fwd, cells[i].t_s, cells[i + 1].t_s),
                    S::select(fwd, cells[i].t_g, cells[i + 1].t_g),
                    S::select(fwd, cells[i].p, cells[i + 1].p),
                )
            } else {
                (cells[i].t_s, cells[i].t_g, cells[i].p)
            };
            hs.push(th.phase_enthalpy(Phase::Solid, ts, pp, n));
            hg.push(th.phase_enthalpy(Phase::Gas, tg, pp, n));
        }

        let mut dc = Vec::with_capacity(nz);
        let mut du_s = Vec::with_capacity(nz);
        let mut du_g = Vec::with_capacity(nz);
        let mut alg = Vec::with_capacity(nz);
        for (i, cell) in cells.iter().enumerate() {
            let c = cell.c.map(nonneg);
            let r = self.kinetics.production_rate(&c, cell.t_s);
            dc.push(std::array::from_fn(|j| -(flux[i + 1][j] - flux[i][j]) / dz + r[j]));
            let j_sg = heat_exchange(tr[i].vhat_s, cell.t_g, cell.t_s, p.k_sg, p.d_med);
            du_s.push(-(hs[i + 1] - hs[i]) / dz + j_sg - p.q_amb);
            du_g.push(-(hg[i + 1] - hg[i]) / dz - j_sg - p.q_amb);
            alg.push(self.algebraic_residuals(cell));
        }
        CalcinerEval { dc, du_s, du_g, alg, v, flux }
    }
}

/// Stand-alone calciner with fixed boundary conditions, for tests and
/// component studies.
pub struct CalcinerSystem {
    pub thermo: Thermo,
    pub kinetics: KineticParams,
    pub params: CalcinerParams,
    pub boundary: CalcinerBoundary<f64>,
    pub layout: CellLayout,
    mask: Vec<bool>,
}

impl CalcinerSystem {
    pub fn new(
        thermo: Thermo,
        kinetics: KineticParams,
        params: CalcinerParams,
        boundary: CalcinerBoundary<f64>,
        ordering: VariableOrdering,
    ) -> Result<Self> {
        params.validate()?;
        let layout = CellLayout { base: 0, nz: params.nz, ordering };
        let mut mask = vec![false; layout.len()];
        layout.fill_differential(&mut mask);
        Ok(CalcinerSystem { thermo, kinetics, params, boundary, layout, mask })
    }

    pub fn state(&self, cells: &[Cell<f64>]) -> Vec<f64> {
        let mut z = vec![0.0; self.layout.len()];
        self.layout.write(cells, &mut z);
        z
    }

    pub fn cells(&self, z: &[f64]) -> Vec<Cell<f64>> {
        self.layout.read(z)
    }

    /// Σ_i c_i Δz A per species [mol].
    pub fn inventory(&self, z: &[f64]) -> MolarVector {
        let vol = self.params.dz() * self.params.area();
        let mut acc = [0.0; NSPECIES];
        for cell in self.cells(z) {
            for j in 0..NSPECIES {
                acc[j] += cell.c[j] * vol;
            }
        }
        acc
    }

    /// Σ_i (û_s + û_g) Δz A [J].
    pub fn energy(&self, z: &[f64]) -> f64 {
        let vol = self.params.dz() * self.params.area();
        self.cells(z).iter().map(|c| (c.u_s + c.u_g) * vol).sum()
    }
}

impl DaeSystem for CalcinerSystem {
    fn n(&self) -> usize {
        self.layout.len()
    }

    fn differential(&self) -> &[bool] {
        &self.mask
    }

    fn residual<S: Scalar>(&self, z: &[S], out: &mut [S]) {
        let cells = self.layout.read(z);
        let b = &self.boundary;
        let bnd = CalcinerBoundary {
            p_in: S::cst(b.p_in),
            p_out: b.p_out.map(S::cst),
            f_in: b.f_in.map(S::cst),
            h_s_in: S::cst(b.h_s_in),
            h_g_in: S::cst(b.h_g_in),
        };
        let calc = Calciner::new(&self.thermo, &self.kinetics, &self.params);
        let ev = calc.evaluate(&cells, &bnd);
        self.layout.scatter(&ev, out);
    }

    fn var_scales(&self) -> Vec<f64> {
        let mut v = vec![1.0; self.n()];
        let mut r = vec![1.0; self.n()];
        self.layout.fill_scales(&mut v, &mut r);
        v
    }

    fn fd_scales(&self) -> Vec<f64> {
        let mut v = self.var_scales();
        for i in 0..self.layout.nz {
            v[self.layout.idx(i, J_P)] = 100.0;
            v[self.layout.idx(i, J_TS)] = 10.0;
            v[self.layout.idx(i, J_TG)] = 10.0;
        }
        v
    }

    fn res_scales(&self) -> Vec<f64> {
        let mut v = vec![1.0; self.n()];
        let mut r = vec![1.0; self.n()];
        self.layout.fill_scales(&mut v, &mut r);
        r
    }

    fn var_name(&self, i: usize) -> String {
        self.layout.var_name(i).unwrap_or_else(|| format!("z[{i}]"))
    }

    fn admissible(&self, z: &[f64]) -> bool {
        self.cells(z).iter().all(|c| c.t_s > 0.0 && c.t_g > 0.0 && c.p > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::{A, AB2, Q};
    use approx::assert_relative_eq;

    #[test]
    fn darcy_examples() {
        assert_eq!(darcy_velocity(0.0, 0.7, 3e-5, 0.18), 0.0);
        let v = darcy_velocity(-10.0, 0.7, 3e-5, 0.18);
        // hand evaluation of the inverted Darcy-Weisbach law
        let k = 2.0 / 0.316 * (0.18f64.powi(5) / (3e-5 * 0.343)).powf(0.25);
        let expect = (k * 10.0).powf(4.0 / 7.0);
        assert_relative_eq!(v, expect, max_relative = 1e-14);
        assert_relative_eq!(v, 16.2, max_relative = 5e-3);
        assert_eq!(darcy_velocity(10.0, 0.7, 3e-5, 0.18), -v);
        let s = darcy_velocity_smooth(-10.0, 0.7, 3e-5, 0.18, 1e-6);
        assert_relative_eq!(s, v, max_relative = 1e-10);
        assert_eq!(darcy_velocity_smooth(0.0, 0.7, 3e-5, 0.18, 1.0), 0.0);
        assert_eq!(darcy_velocity_smooth(3.0, 0.7, 3e-5, 0.18, 1.0), -darcy_velocity_smooth(-3.0, 0.7, 3e-5, 0.18, 1.0));
    }

    #[test]
    fn heat_exchange_examples() {
        assert_eq!(heat_exchange(0.01, 900.0, 900.0, 200.0, 7.61e-6), 0.0);
        assert_eq!(heat_exchange(0.0, 900.0, 800.0, 200.0, 7.61e-6), 0.0);
        let j = heat_exchange(0.01, 900.0, 800.0, 200.0, 7.61e-6);
        assert_relative_eq!(j, 200.0 * 6.0 * 0.01 / 7.61e-6 * 100.0, max_relative = 1e-14);
        assert_relative_eq!(j, 1.577e8, max_relative = 1e-3);
    }

    fn setup(nz: usize) -> (Thermo, KineticParams, CalcinerParams) {
        let params = CalcinerParams { nz, ..CalcinerParams::default() };
        (Thermo::default(), KineticParams::default(), params)
    }

    fn uniform_cells(th: &Thermo, nz: usize, solids: MolarVector, t: f64, p: f64) -> Vec<Cell<f64>> {
        let c = Cell::fill_gas(th, solids, 0.2, t, t, p);
        vec![Cell::consistent(th, c, t, t, p); nz]
    }

    #[test]
    fn uniform_state_has_zero_fluxes() {
        let (th, kin, params) = setup(4);
        let calc = Calciner::new(&th, &kin, &params);
        let cells = uniform_cells(&th, 4, [0.0, 0.5, 0.0, 0.0, 0.3], 900.0, 1.05e5);
        let bnd = CalcinerBoundary::closed(1.05e5);
        let bnd = CalcinerBoundary { p_out: Some(1.05e5), ..bnd };
        let ev = calc.evaluate(&cells, &bnd);
        for n in &ev.flux {
            assert!(n.iter().all(|x| *x == 0.0));
        }
        for i in 0..4 {
            assert!(ev.dc[i].iter().all(|x| *x == 0.0));
            assert_eq!(ev.du_s[i], 0.0);
            assert_eq!(ev.du_g[i], 0.0);
            assert!(ev.alg[i].iter().all(|x| x.abs() < 1e-9));
        }
    }

    #[test]
    fn two_cell_fluxes_by_hand() {
        let (th, kin, mut params) = setup(2);
        params.d_diff = [0.05; NSPECIES];
        let calc = Calciner::new(&th, &kin, &params);
        let c1 = Cell::fill_gas(&th, [0.2, 0.1, 0.0, 0.0, 0.3], 0.1, 800.0, 820.0, 1.0501e5);
        let c2 = Cell::fill_gas(&th, [0.1, 0.2, 0.0, 0.0, 0.25], 0.2, 850.0, 860.0, 1.05e5);
        let cells = [
            Cell::consistent(&th, c1, 800.0, 820.0, 1.0501e5),
            Cell::consistent(&th, c2, 850.0, 860.0, 1.05e5),
        ];
        let tr: Vec<_> = cells.iter().map(|c| cell_transport(&th, c)).collect();
        let bnd = CalcinerBoundary::from_streams(&th, [0.0; NSPECIES], 700.0, 700.0, 1.0502e5, Some(1.0499e5));
        let (v, n) = calc.interface_fluxes(&cells, &tr, &bnd);
        let dz = 6.0;
        let vi = darcy_velocity_smooth(-10.0 / dz, tr[0].rho, tr[0].mu, 0.18, 1.0);
        assert_relative_eq!(v[1], vi, max_relative = 1e-12);
        for j in 0..NSPECIES {
            let hand = vi * c1[j] - 0.05 * (c2[j] - c1[j]) / dz;
            assert_relative_eq!(n[1][j], hand, max_relative = 1e-12, epsilon = 1e-15);
            let vo = darcy_velocity_smooth(-10.0 / dz, tr[1].rho, tr[1].mu, 0.18, 1.0);
            assert_relative_eq!(n[2][j], vo * c2[j], max_relative = 1e-12);
        }
    }

    #[test]
    fn pure_advection_without_diffusion() {
        let (th, kin, mut params) = setup(3);
        params.d_diff = [0.0; NSPECIES];
        let calc = Calciner::new(&th, &kin, &params);
        let p = [1.0503e5, 1.0502e5, 1.0501e5];
        let cells: Vec<_> = (0..3)
            .map(|i| {
                let c = Cell::fill_gas(&th, [0.0, 0.1 * i as f64, 0.0, 0.0, 0.3], 0.2, 900.0, 900.0, p[i]);
                Cell::consistent(&th, c, 900.0, 900.0, p[i])
            })
            .collect();
        let tr: Vec<_> = cells.iter().map(|c| cell_transport(&th, c)).collect();
        let bnd = CalcinerBoundary::closed(1.0504e5);
        let (v, n) = calc.interface_fluxes(&cells, &tr, &bnd);
        for i in 0..2 {
            for j in 0..NSPECIES {
                assert_eq!(n[i + 1][j], v[i + 1] * cells[i].c[j]);
            }
        }
    }

    #[test]
    fn consistent_cells_have_zero_algebraic_residuals() {
        let (th, kin, params) = setup(2);
        let calc = Calciner::new(&th, &kin, &params);
        let c = Cell::fill_gas(&th, [0.3, 0.2, 0.0, 0.0, 0.6], 0.15, 750.0, 910.0, 1.07e5);
        let cell = Cell::consistent(&th, c, 750.0, 910.0, 1.07e5);
        let r = calc.algebraic_residuals(&cell);
        assert!(r[0].abs() < 1e-8 && r[1].abs() < 1e-8 && r[2].abs() < 1e-14);
        let bumped = Cell { u_s: cell.u_s + 3.5, ..cell };
        let r2 = calc.algebraic_residuals(&bumped);
        assert_relative_eq!(r2[0] - r[0], -3.5, max_relative = 1e-9);
    }

    #[test]
    fn closed_reactor_conserves_moieties_in_rhs() {
        let (th, kin, params) = setup(5);
        let calc = Calciner::new(&th, &kin, &params);
        let cells: Vec<_> = (0..5)
            .map(|i| {
                let p = 1.05e5 - 3.0 * i as f64;
                let t = 850.0 + 10.0 * i as f64;
                let c = Cell::fill_gas(&th, [0.4, 0.1, 0.0, 0.0, 0.5], 0.2, t, t + 20.0, p);
                Cell::consistent(&th, c, t, t + 20.0, p)
            })
            .collect();
        let ev = calc.evaluate(&cells, &CalcinerBoundary::closed(1.05e5));
        let sum = |f: &dyn Fn(&MolarVector) -> f64| ev.dc.iter().map(f).sum::<f64>();
        let rate_scale = ev.dc.iter().map(|d| d[AB2].abs()).fold(0.0, f64::max);
        assert!(sum(&|d| d[AB2] + d[A]).abs() < 1e-12 * rate_scale.max(1.0));
        assert!(sum(&|d| 2.0 * d[AB2] + d[B]).abs() < 1e-12 * rate_scale.max(1.0));
        assert!(sum(&|d| d[Q]).abs() < 1e-12);
        let e: f64 = ev.du_s.iter().chain(&ev.du_g).sum();
        assert!(e.abs() < 1e-6 * ev.du_s.iter().map(|x| x.abs()).fold(1.0, f64::max));
    }
}
