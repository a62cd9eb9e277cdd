//! Full plant: three pre-heating cyclones, the calciner and the gas
//! recirculation loop (filter, fan, purge, mixer, hot gas generator).

mod guess;
mod inputs;
mod report;

pub use inputs::{Disturbances, InputSchedule, PlantInputs, Schedule};
pub use report::{Closure, PlantOutputs, StreamRow, StreamTable};

use crate::calciner::{
    cell_transport, darcy_velocity_smooth, Calciner, CalcinerBoundary, CalcinerEval, CalcinerParams, Cell,
    CellLayout, VariableOrdering, CELL_VARS, J_P, J_TG, J_TS,
};
use crate::cyclone::{solid_load_fraction, Cyclone, CycloneEval, CycloneInlet, CycloneParams, CycloneProps, CycloneState};
use crate::dae::{DaeSystem, Piecewise};
use crate::error::{Error, Result};
use crate::kinetics::KineticParams;
use crate::scalar::Scalar;
use crate::thermo::{MolarVector, Phase, Thermo, NSPECIES};
use crate::units_aux::{fan_residual, filter, heater_residual, mix_flows, mixer_residual, purge_split, FanSpec, StreamSpec};

pub const CYCLONE_VARS: usize = 14;
pub const NCYCLONES: usize = 3;
pub const LOOP_VARS: usize = 7;

// offsets inside a cyclone block
pub const K_US: usize = 5;
pub const K_UG: usize = 6;
pub const K_TS: usize = 7;
pub const K_TG: usize = 8;
pub const K_P: usize = 9;
pub const K_P1: usize = 10;
pub const K_P2: usize = 11;
pub const K_V1: usize = 12;
pub const K_V2: usize = 13;

// offsets inside the loop block
pub const L_P1: usize = 0;
pub const L_P5: usize = 4;
pub const L_TMIX: usize = 5;
pub const L_TGIN: usize = 6;

/// Pressure change [Pa] used to size finite-difference steps.
pub const PRESSURE_STEP_SCALE: f64 = 100.0;
/// Temperature change [K] used to size finite-difference steps.
pub const TEMPERATURE_STEP_SCALE: f64 = 10.0;
/// Concentration change [mol/m³] used to size finite-difference steps.
pub const CONCENTRATION_STEP_SCALE: f64 = 1.0;

/// Sweeps of the fixed-point iteration coupling the efficiencies of cyclones
/// 1 and 2.
pub const EFFICIENCY_SWEEPS: usize = 6;

/// Variable ordering: cyclone 1, 2, 3, calciner cells, P1..P5, T_mix, T_g,in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlantLayout {
    pub nz: usize,
    pub ordering: VariableOrdering,
}

impl PlantLayout {
    /// First index of cyclone `k` (0 for cyclone 1).
    pub fn cyclone(&self, k: usize) -> usize {
        k * CYCLONE_VARS
    }

    pub fn calciner(&self) -> CellLayout {
        CellLayout { base: NCYCLONES * CYCLONE_VARS, nz: self.nz, ordering: self.ordering }
    }

    pub fn loop_base(&self) -> usize {
        NCYCLONES * CYCLONE_VARS + self.nz * CELL_VARS
    }

    /// Index of loop pressure P_k, k = 1..5.
    pub fn pressure(&self, k: usize) -> usize {
        self.loop_base() + k - 1
    }

    pub fn n(&self) -> usize {
        self.loop_base() + LOOP_VARS
    }

    pub fn read_cyclone<S: Scalar>(&self, z: &[S], k: usize) -> CycloneState<S> {
        let b = self.cyclone(k);
        CycloneState {
            c: std::array::from_fn(|j| z[b + j]),
            u_s: z[b + K_US],
            u_g: z[b + K_UG],
            t_s: z[b + K_TS],
            t_g: z[b + K_TG],
            p: z[b + K_P],
            p1: z[b + K_P1],
            p2: z[b + K_P2],
            v1: z[b + K_V1],
            v2: z[b + K_V2],
        }
    }

    pub fn write_cyclone(&self, st: &CycloneState<f64>, k: usize, z: &mut [f64]) {
        let b = self.cyclone(k);
        z[b..b + NSPECIES].copy_from_slice(&st.c);
        let rest = [st.u_s, st.u_g, st.t_s, st.t_g, st.p, st.p1, st.p2, st.v1, st.v2];
        z[b + NSPECIES..b + CYCLONE_VARS].copy_from_slice(&rest);
    }

    pub fn var_name(&self, i: usize) -> String {
        const CYC: [&str; CYCLONE_VARS] =
            ["c_AB2", "c_A", "c_B", "c_air", "c_Q", "u_s", "u_g", "T_s", "T_g", "P", "P1", "P2", "v1", "v2"];
        const LOOP: [&str; LOOP_VARS] = ["P1", "P2", "P3", "P4", "P5", "T_mix", "T_g,in"];
        if i < NCYCLONES * CYCLONE_VARS {
            return format!("cyclone{}.{}", i / CYCLONE_VARS + 1, CYC[i % CYCLONE_VARS]);
        }
        if let Some(name) = self.calciner().var_name(i) {
            return name;
        }
        match LOOP.get(i.wrapping_sub(self.loop_base())) {
            Some(name) => format!("loop.{name}"),
            None => format!("z[{i}]"),
        }
    }
}

/// Model parameters other than inputs and disturbances.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantParams {
    pub calciner: CalcinerParams,
    /// Cyclones 1, 2, 3.
    pub cyclones: [CycloneParams; NCYCLONES],
    pub fan_eta: f64,
    pub kinetics: KineticParams,
}

impl Default for PlantParams {
    fn default() -> Self {
        PlantParams {
            calciner: CalcinerParams::default(),
            cyclones: [CycloneParams::default(); NCYCLONES],
            fan_eta: 0.8,
            kinetics: KineticParams::default(),
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        self.calciner.validate()?;
        self.kinetics.validate()?;
        FanSpec { eta_fan: self.fan_eta, p_fan: 0.0 }.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitPressures {
    pub unit: &'static str,
    pub p_in: f64,
    pub p_out: f64,
}

impl UnitPressures {
    pub fn drop(&self) -> f64 {
        self.p_in - self.p_out
    }
}

/// Everything computed during one residual evaluation.
#[derive(Clone, Debug)]
pub struct PlantEval<S> {
    pub cyclones: [CycloneState<S>; NCYCLONES],
    pub props: [CycloneProps<S>; NCYCLONES],
    pub inlets: [CycloneInlet<S>; NCYCLONES],
    pub c0: [S; NCYCLONES],
    pub eta: [S; NCYCLONES],
    pub cyc_eval: [CycloneEval<S>; NCYCLONES],
    pub cells: Vec<Cell<S>>,
    pub calciner: CalcinerEval<S>,
    pub boundary: CalcinerBoundary<S>,
    /// Calciner outlet molar flows [mol/s].
    pub calciner_out: MolarVector<S>,
    /// Loop pressures P1..P5.
    pub p: [S; 5],
    pub t_mix: S,
    pub t_gin: S,
    pub f_clay: MolarVector<S>,
    pub f_fresh: MolarVector<S>,
    /// Gas after the filter.
    pub f_filtered: MolarVector<S>,
    pub f_dust: MolarVector<S>,
    pub f_purge: MolarVector<S>,
    pub f_recirc: MolarVector<S>,
    pub f_mix: MolarVector<S>,
    /// Residuals of the loop rows.
    pub loop_res: [S; LOOP_VARS],
}

/// Plant DAE with its inputs and disturbances.
#[derive(Clone, Debug)]
pub struct Plant {
    pub thermo: Thermo,
    pub params: PlantParams,
    pub schedule: InputSchedule,
    pub disturbances: Disturbances,
    /// Inputs currently in force.
    pub inputs: PlantInputs,
    pub layout: PlantLayout,
    mask: Vec<bool>,
    var_scales: Vec<f64>,
    res_scales: Vec<f64>,
}

impl Plant {
    pub fn new(
        thermo: Thermo,
        mut params: PlantParams,
        schedule: InputSchedule,
        disturbances: Disturbances,
        ordering: VariableOrdering,
    ) -> Result<Self> {
        disturbances.validate()?;
        params.calciner.d_med = disturbances.d_med;
        params.validate()?;
        schedule.validate()?;
        let layout = PlantLayout { nz: params.calciner.nz, ordering };
        let n = layout.n();
        let mut mask = vec![false; n];
        let mut var_scales = vec![1.0; n];
        let mut res_scales = vec![1.0; n];
        for k in 0..NCYCLONES {
            let b = layout.cyclone(k);
            for j in 0..CYCLONE_VARS {
                mask[b + j] = j < K_TS;
                (var_scales[b + j], res_scales[b + j]) = match j {
                    K_US | K_UG => (1e6, 1e6),
                    K_TS | K_TG => (1.0, 1e6),
                    K_P => (1e5, 1.0),
                    K_P1 | K_P2 => (1e5, 1e5),
                    K_V1 => (10.0, 1e5),
                    K_V2 => (10.0, 1e5),
                    _ => (1.0, 1.0),
                };
            }
        }
        let cl = layout.calciner();
        cl.fill_differential(&mut mask);
        cl.fill_scales(&mut var_scales, &mut res_scales);
        let lb = layout.loop_base();
        for j in 0..LOOP_VARS {
            (var_scales[lb + j], res_scales[lb + j]) = match j {
                L_TMIX | L_TGIN => (1.0, 1e3),
                L_P5 => (1e5, 1e3),
                _ => (1e5, 1.0),
            };
        }
        let inputs = schedule.at(0.0);
        Ok(Plant { thermo, params, schedule, disturbances, inputs, layout, mask, var_scales, res_scales })
    }

    /// Plant with default data and the given inputs held constant.
    pub fn with_inputs(inputs: &PlantInputs, nz: usize) -> Result<Self> {
        let mut params = PlantParams::default();
        params.calciner.nz = nz;
        Plant::new(
            Thermo::default(),
            params,
            InputSchedule::constant(inputs),
            Disturbances::default(),
            VariableOrdering::ByCell,
        )
    }

    pub fn set_inputs(&mut self, inputs: PlantInputs) {
        self.inputs = inputs;
    }

    fn cyclone(&self, k: usize) -> Cyclone<'_> {
        Cyclone {
            thermo: &self.thermo,
            kinetics: &self.params.kinetics,
            params: &self.params.cyclones[k],
            d_med: self.disturbances.d_med,
            k_sg: self.params.calciner.k_sg,
        }
    }

    /// Evaluates every unit and connection.
    pub fn evaluate<S: Scalar>(&self, z: &[S]) -> PlantEval<S> {
        let th = &self.thermo;
        let u = &self.inputs;
        let d = &self.disturbances;
        let lay = &self.layout;
        let lb = lay.loop_base();
        let p: [S; 5] = std::array::from_fn(|k| z[lb + k]);
        let t_mix = z[lb + L_TMIX];
        let t_gin = z[lb + L_TGIN];

        let cyclones: [CycloneState<S>; NCYCLONES] = std::array::from_fn(|k| lay.read_cyclone(z, k));
        let units: [Cyclone<'_>; NCYCLONES] = std::array::from_fn(|k| self.cyclone(k));
        let props: [CycloneProps<S>; NCYCLONES] = std::array::from_fn(|k| units[k].props(&cyclones[k]));
        let [s1, s2, s3] = &cyclones;

        // calciner outlet, feeding cyclone 3
        let cp = &self.params.calciner;
        let cells = lay.calciner().read(z);
        let last = cells[cells.len() - 1];
        let tr_last = cell_transport(th, &last);
        let v_out =
            darcy_velocity_smooth((p[1] - last.p) / cp.dz(), tr_last.rho, tr_last.mu, cp.diameter, cp.darcy_sign_eps);
        let calciner_out: MolarVector<S> = last.c.map(|c| c * v_out * cp.area());
        let in3 = CycloneInlet {
            f_in: calciner_out,
            h_s_in: th.phase_enthalpy(Phase::Solid, last.t_s, last.p, &calciner_out),
            h_g_in: th.phase_enthalpy(Phase::Gas, last.t_g, last.p, &calciner_out),
            p_in: p[1],
            p_out: p[2],
        };
        let c0_3 = solid_load_fraction(th, &in3.f_in);
        let eta3 = units[2].efficiency(s3, &props[2], c0_3);
        let (f2_3, _) = units[2].outlet_flows(s3, eta3);

        // cyclones 1 and 2 feed each other
        let f_clay = u.clay_flows(th).map(S::cst);
        let mut eta1 = S::cst(1.0);
        let mut eta2 = S::cst(1.0);
        let mut c0_1 = S::zero();
        let mut c0_2 = S::zero();
        for _ in 0..EFFICIENCY_SWEEPS {
            let (_, f3_1) = units[0].outlet_flows(s1, eta1);
            c0_2 = solid_load_fraction(th, &mix_flows(&f2_3, &f3_1));
            eta2 = units[1].efficiency(s2, &props[1], c0_2);
            let (f2_2, _) = units[1].outlet_flows(s2, eta2);
            c0_1 = solid_load_fraction(th, &mix_flows(&f_clay, &f2_2));
            eta1 = units[0].efficiency(s1, &props[0], c0_1);
        }
        let (f2_1, f3_1) = units[0].outlet_flows(s1, eta1);
        let (f2_2, f3_2) = units[1].outlet_flows(s2, eta2);

        let in2 = CycloneInlet {
            f_in: mix_flows(&f2_3, &f3_1),
            h_s_in: th.phase_enthalpy(Phase::Solid, s3.t_s, s3.p, &f2_3) + th.phase_enthalpy(Phase::Solid, s1.t_s, s1.p, &f3_1),
            h_g_in: th.phase_enthalpy(Phase::Gas, s3.t_g, s3.p, &f2_3),
            p_in: p[2],
            p_out: p[3],
        };
        let t_clay = S::cst(d.t_clay);
        let in1 = CycloneInlet {
            f_in: mix_flows(&f_clay, &f2_2),
            h_s_in: th.phase_enthalpy(Phase::Solid, t_clay, p[3], &f_clay) + th.phase_enthalpy(Phase::Solid, s2.t_s, s2.p, &f2_2),
            h_g_in: th.phase_enthalpy(Phase::Gas, s2.t_g, s2.p, &f2_2),
            p_in: p[3],
            p_out: p[4],
        };
        let inlets = [in1, in2, in3];
        let c0 = [c0_1, c0_2, c0_3];
        let eta = [eta1, eta2, eta3];
        let cyc_eval: [CycloneEval<S>; NCYCLONES] =
            std::array::from_fn(|k| units[k].evaluate(&cyclones[k], &inlets[k], &props[k], c0[k], eta[k]));

        // gas loop
        let exhaust = StreamSpec { f: f2_1, t: s1.t_g, p: p[4] };
        let (gas, dust) = filter(&exhaust);
        let alpha = S::cst(u.alpha_purge);
        let (f_purge, f_recirc) = purge_split(&gas.f, alpha);
        let f_fresh = u.fresh_air_flows(th).map(S::cst);
        let f_mix = mix_flows(&f_recirc, &f_fresh);
        let recirc = StreamSpec { f: f_recirc, t: s1.t_g, p: p[0] };
        let fresh = StreamSpec { f: f_fresh, t: S::cst(d.t_fresh), p: p[0] };
        let mixed = StreamSpec { f: f_mix, t: t_mix, p: p[0] };

        let boundary = CalcinerBoundary {
            p_in: p[0],
            p_out: Some(p[1]),
            f_in: mix_flows(&f_mix, &f3_2),
            h_s_in: th.phase_enthalpy(Phase::Solid, s2.t_s, p[0], &f3_2),
            h_g_in: th.phase_enthalpy(Phase::Gas, t_gin, p[0], &f_mix),
        };
        let calc = Calciner::new(th, &self.params.kinetics, cp);
        let calciner = calc.evaluate(&cells, &boundary);

        let g = |k: usize| &self.params.cyclones[k].geometry;
        let a_calc = cp.area();
        let fan = FanSpec { eta_fan: self.params.fan_eta, p_fan: u.p_fan };
        let f_vol = th.phase_volume(Phase::Gas, s1.t_g, p[4], &gas.f);
        let q_in = th.phase_volume(Phase::Gas, t_gin, p[0], &f_mix) + th.phase_volume(Phase::Solid, s2.t_s, p[0], &f3_2);
        let loop_res = [
            calciner.v_in() * a_calc - q_in,
            calciner.v_out() * a_calc - s3.v1 * g(2).a1,
            s2.v1 * g(1).a1 - s3.v2 * g(2).a2,
            s1.v1 * g(0).a1 - s2.v2 * g(1).a2,
            fan_residual(f_vol, p[0], p[4], &fan),
            mixer_residual(th, t_mix, &recirc, &fresh, p[0]),
            heater_residual(th, t_gin, &mixed, S::cst(u.p_ehgg), p[0]),
        ];

        PlantEval {
            cyclones,
            props,
            inlets,
            c0,
            eta,
            cyc_eval,
            cells,
            calciner,
            boundary,
            calciner_out,
            p,
            t_mix,
            t_gin,
            f_clay,
            f_fresh,
            f_filtered: gas.f,
            f_dust: dust.f,
            f_purge,
            f_recirc,
            f_mix,
            loop_res,
        }
    }

    fn scatter<S: Scalar>(&self, ev: &PlantEval<S>, out: &mut [S]) {
        let lay = &self.layout;
        for k in 0..NCYCLONES {
            let b = lay.cyclone(k);
            let e = &ev.cyc_eval[k];
            out[b..b + NSPECIES].copy_from_slice(&e.dc);
            out[b + K_US] = e.du_s;
            out[b + K_UG] = e.du_g;
            let [vol, us, ug, dpa, dpb, dpc, pm] = e.alg;
            out[b + K_TS] = us;
            out[b + K_TG] = ug;
            out[b + K_P] = vol;
            out[b + K_P1] = dpa;
            out[b + K_P2] = dpb;
            out[b + K_V1] = dpc;
            out[b + K_V2] = pm;
        }
        lay.calciner().scatter(&ev.calciner, out);
        let lb = lay.loop_base();
        out[lb..lb + LOOP_VARS].copy_from_slice(&ev.loop_res);
    }

    /// Inlet and outlet pressure of each unit around the gas loop, in flow
    /// order: calciner, cyclone 3, cyclone 2, cyclone 1, fan.
    pub fn pressure_topology(&self, z: &[f64]) -> [UnitPressures; 5] {
        let lb = self.layout.loop_base();
        let p = |k: usize| z[lb + k - 1];
        let unit = |name, i: usize, o: usize| UnitPressures { unit: name, p_in: p(i), p_out: p(o) };
        [
            unit("calciner", 1, 2),
            unit("cyclone3", 2, 3),
            unit("cyclone2", 3, 4),
            unit("cyclone1", 4, 5),
            unit("fan", 5, 1),
        ]
    }

    pub fn check_state(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.layout.n() {
            return Err(Error::State(format!("state has {} entries, layout needs {}", z.len(), self.layout.n())));
        }
        if let Some(i) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::State(format!("{} is not finite", self.layout.var_name(i))));
        }
        if !self.admissible(z) {
            return Err(Error::State("non-positive temperature or pressure".into()));
        }
        let ev = self.evaluate(z);
        for k in 0..NCYCLONES {
            let inflow: f64 = ev.inlets[k].f_in.iter().sum();
            if inflow > 0.0 && ev.cyclones[k].v1 <= 0.0 {
                return Err(Error::Singularity(format!(
                    "cyclone {} receives {inflow:.3e} mol/s with inlet velocity {:.3e} m/s",
                    k + 1,
                    ev.cyclones[k].v1
                )));
            }
        }
        Ok(())
    }
}

impl DaeSystem for Plant {
    fn n(&self) -> usize {
        self.layout.n()
    }

    fn differential(&self) -> &[bool] {
        &self.mask
    }

    fn residual<S: Scalar>(&self, z: &[S], out: &mut [S]) {
        let ev = self.evaluate(z);
        self.scatter(&ev, out);
    }

    fn var_scales(&self) -> Vec<f64> {
        self.var_scales.clone()
    }

    fn fd_scales(&self) -> Vec<f64> {
        let mut s = self.var_scales.clone();
        let lay = &self.layout;
        for k in 0..NCYCLONES {
            for j in [K_P, K_P1, K_P2] {
                s[lay.cyclone(k) + j] = PRESSURE_STEP_SCALE;
            }
            for j in [K_TS, K_TG] {
                s[lay.cyclone(k) + j] = TEMPERATURE_STEP_SCALE;
            }
            for j in 0..NSPECIES {
                s[lay.cyclone(k) + j] = CONCENTRATION_STEP_SCALE;
            }
        }
        for i in 0..lay.nz {
            s[lay.calciner().idx(i, J_P)] = PRESSURE_STEP_SCALE;
            s[lay.calciner().idx(i, J_TS)] = TEMPERATURE_STEP_SCALE;
            s[lay.calciner().idx(i, J_TG)] = TEMPERATURE_STEP_SCALE;
            for j in 0..NSPECIES {
                s[lay.calciner().idx(i, j)] = CONCENTRATION_STEP_SCALE;
            }
        }
        for k in 1..=5 {
            s[lay.pressure(k)] = PRESSURE_STEP_SCALE;
        }
        s[lay.loop_base() + L_TMIX] = TEMPERATURE_STEP_SCALE;
        s[lay.loop_base() + L_TGIN] = TEMPERATURE_STEP_SCALE;
        s
    }

    fn res_scales(&self) -> Vec<f64> {
        self.res_scales.clone()
    }

    fn var_name(&self, i: usize) -> String {
        self.layout.var_name(i)
    }

    fn admissible(&self, z: &[f64]) -> bool {
        let lay = &self.layout;
        let cyc = (0..NCYCLONES).all(|k| {
            let b = lay.cyclone(k);
            [K_TS, K_TG, K_P, K_P1, K_P2].iter().all(|j| z[b + j] > 0.0)
        });
        let cells = lay.calciner().read(z).iter().all(|c| c.t_s > 0.0 && c.t_g > 0.0 && c.p > 0.0);
        let lb = lay.loop_base();
        cyc && cells && z[lb..lb + LOOP_VARS].iter().all(|v| *v > 0.0)
    }
}

impl Piecewise for Plant {
    fn breakpoints(&self) -> Vec<f64> {
        self.schedule.breakpoints()
    }

    fn activate(&mut self, t: f64) {
        self.inputs = self.schedule.at(t);
    }
}
