use super::{Plant, NCYCLONES};
use crate::calciner::{cell_transport, Cell};
use crate::cyclone::{pressure_drop_ab, pressure_drop_c, separation_velocity, CycloneState};
use crate::dae::{consistent_init_simple, steady_state, SolverConfig};
use crate::error::Result;
use rand::Rng;
use crate::thermo::{MolarVector, AB2, A, AIR, B, NSPECIES, Q, R_GAS};

/// Assumed conversions in cyclone 1, 2 and 3 and at the calciner ends.
const X_CYC: [f64; NCYCLONES] = [0.0, 0.3, 0.9];
const X_CALC: (f64, f64) = (0.35, 0.9);
/// Temperatures (T_s, T_g) [°C] of cyclone 1, 2, 3.
const T_CYC: [(f64, f64); NCYCLONES] = [(370.0, 405.0), (455.0, 505.0), (505.0, 513.0)];
const T_CALC: ((f64, f64), (f64, f64)) = ((460.0, 525.0), (505.0, 513.0));
const P_RETURN: f64 = 1.044e5;

fn celsius(t: f64) -> f64 {
    t + 273.15
}

fn solids_at(f_clay: &MolarVector, x: f64, scale: f64) -> MolarVector {
    let mut f = [0.0; NSPECIES];
    f[AB2] = (1.0 - x) * f_clay[AB2] * scale;
    f[A] = x * f_clay[AB2] * scale;
    f[Q] = f_clay[Q] * scale;
    f
}

impl Plant {
    /// Rough physically ordered starting point for the current inputs.
    pub fn initial_guess(&self) -> Vec<f64> {
        let th = &self.thermo;
        let u = &self.inputs;
        let lay = &self.layout;
        let m = *th.molar_masses();
        let f_clay = u.clay_flows(th);
        let f_fresh = u.fresh_air_flows(th);
        let alpha = u.alpha_purge.max(0.05);
        let water = 2.0 * X_CYC[2] * f_clay[AB2];
        let g_b = (f_fresh[B] + water) / alpha;
        let g_air = (f_fresh[AIR] / alpha).max(1e-3);
        let x_b = g_b / (g_b + g_air);
        let g_mol = g_b + g_air;
        let gas_mass = g_b * m[B] + g_air * m[AIR];
        let q_gas = |t: f64, p: f64| g_mol * R_GAS * t / p;
        let mut z = vec![0.0; lay.n()];

        // cyclones, walking upstream from the loop return
        let mut p_out = P_RETURN;
        let mut loop_p = [0.0; 5];
        loop_p[4] = p_out;
        for k in 0..NCYCLONES {
            let geo = &self.params.cyclones[k].geometry;
            let (ts, tg) = (celsius(T_CYC[k].0), celsius(T_CYC[k].1));
            let fs = solids_at(&f_clay, X_CYC[k], if k == 0 { 1.1 } else { 1.0 });
            let solid_mass: f64 = (0..NSPECIES).map(|i| fs[i] * m[i]).sum();
            let c0 = solid_mass / (solid_mass + gas_mass);
            let q = q_gas(tg, p_out);
            let v1 = q / geo.a1;
            let v2 = q / geo.a2;
            let rho_g = p_out / (R_GAS * tg) * gas_mass / g_mol;
            let mu = th.gas_viscosity(tg, [x_b, 1.0 - x_b]);
            let dpc = pressure_drop_c(v2, rho_g, geo);
            let (dpa, dpb) = pressure_drop_ab(v1, rho_g, mu, c0, &self.params.cyclones[k]);
            let p2 = p_out + dpc;
            let p1 = p2 + dpb;
            let p_in = p1 + dpa;
            let p = 0.5 * (p1 + p2);
            let capture = separation_velocity(v1, geo) * geo.a3;
            let c_s = fs.map(|f| f / capture);
            let c = Cell::fill_gas(th, c_s, x_b, ts, tg, p);
            let cell = Cell::consistent(th, c, ts, tg, p);
            let st = CycloneState { c, u_s: cell.u_s, u_g: cell.u_g, t_s: ts, t_g: tg, p, p1, p2, v1, v2 };
            lay.write_cyclone(&st, k, &mut z);
            loop_p[3 - k] = p_in;
            p_out = p_in;
        }

        // calciner, from the outlet back to the inlet
        let cp = &self.params.calciner;
        let nz = cp.nz;
        let mut cells = Vec::with_capacity(nz);
        let mut p_down = loop_p[1];
        for i in (0..nz).rev() {
            let w = (i as f64 + 0.5) / nz as f64;
            let lerp = |a: f64, b: f64| a + (b - a) * w;
            let ts = celsius(lerp(T_CALC.0 .0, T_CALC.1 .0));
            let tg = celsius(lerp(T_CALC.0 .1, T_CALC.1 .1));
            let fs = solids_at(&f_clay, lerp(X_CALC.0, X_CALC.1), 1.0);
            let q = q_gas(tg, p_down);
            let v = q / cp.area();
            let c = Cell::fill_gas(th, fs.map(|f| f / q), x_b, ts, tg, p_down);
            let tr = cell_transport(th, &Cell::consistent(th, c, ts, tg, p_down));
            let k = 2.0 / 0.316 * (cp.diameter.powi(5) / (tr.mu * tr.rho.powi(3))).powf(0.25);
            let grad = v.powf(7.0 / 4.0) / k;
            let p = p_down + grad * cp.dz();
            let c = Cell::fill_gas(th, fs.map(|f| f / q), x_b, ts, tg, p);
            cells.push(Cell::consistent(th, c, ts, tg, p));
            p_down = p;
            if i == 0 {
                loop_p[0] = p + grad * cp.dz();
            }
        }
        cells.reverse();
        lay.calciner().write(&cells, &mut z);

        let lb = lay.loop_base();
        z[lb..lb + 5].copy_from_slice(&loop_p);
        let f_fresh_tot = f_fresh[B] + f_fresh[AIR];
        let recirc = g_mol * (1.0 - alpha);
        let t_mix = (celsius(T_CYC[0].1) * recirc + self.disturbances.t_fresh * f_fresh_tot) / (recirc + f_fresh_tot);
        z[lb + super::L_TMIX] = t_mix;
        z[lb + super::L_TGIN] = celsius(T_CALC.0 .1);
        z
    }

    /// Random nearby state: solid concentrations scaled by up to
    /// ±`solids` (relative), temperatures shifted by up to ±`dt` [K], gas
    /// refilled at the original pressure and water fraction, internal
    /// energies recomputed. Algebraic variables are left for consistent
    /// initialization.
    pub fn perturbed<R: Rng>(&self, z: &[f64], rng: &mut R, solids: f64, dt: f64) -> Vec<f64> {
        let th = &self.thermo;
        let lay = &self.layout;
        let mut out = z.to_vec();
        let mut jitter = |c: &mut MolarVector, t_s: &mut f64, t_g: &mut f64, p: f64| {
            let cg = c[B] + c[AIR];
            let x_b = if cg > 0.0 { c[B] / cg } else { 0.0 };
            for i in [AB2, A, Q] {
                c[i] *= 1.0 + solids * rng.gen_range(-1.0..=1.0);
            }
            *t_s += dt * rng.gen_range(-1.0..=1.0);
            *t_g += dt * rng.gen_range(-1.0..=1.0);
            *c = Cell::fill_gas(th, *c, x_b, *t_s, *t_g, p);
            Cell::consistent(th, *c, *t_s, *t_g, p)
        };
        for k in 0..NCYCLONES {
            let mut st = lay.read_cyclone(z, k);
            let cell = jitter(&mut st.c, &mut st.t_s, &mut st.t_g, st.p);
            (st.u_s, st.u_g) = (cell.u_s, cell.u_g);
            lay.write_cyclone(&st, k, &mut out);
        }
        let cl = lay.calciner();
        let cells: Vec<Cell<f64>> = cl
            .read(z)
            .into_iter()
            .map(|mut c| jitter(&mut c.c, &mut c.t_s, &mut c.t_g, c.p))
            .collect();
        cl.write(&cells, &mut out);
        out
    }

    /// Initial guess made consistent in its algebraic variables.
    pub fn consistent_guess(&self, cfg: &SolverConfig) -> Result<Vec<f64>> {
        let mut z = self.initial_guess();
        consistent_init_simple(self, &mut z, cfg)?;
        Ok(z)
    }

    /// Steady state for the inputs currently in force, starting from `guess`
    /// or from the built-in initial guess.
    pub fn steady_state(&self, guess: Option<Vec<f64>>, cfg: &SolverConfig) -> Result<(Vec<f64>, usize)> {
        let z0 = match guess {
            Some(z) => z,
            None => self.consistent_guess(cfg)?,
        };
        steady_state(self, z0, cfg, cfg.newton_tol)
    }
}
