//! Lumped gas-solid cyclone: geometry, balances, pressure drops and
//! separation efficiency.

use crate::calciner::heat_exchange;
use crate::error::{Error, Result};
use crate::kinetics::KineticParams;
use crate::scalar::{rsub, Scalar};
use crate::thermo::{nonneg, MolarVector, Phase, Thermo, AIR, B, NSPECIES, Q};
use std::f64::consts::PI;

/// Below this solid load fraction the load-limit term of the efficiency
/// model is dropped.
pub const LOAD_EPS: f64 = 1e-8;
/// Velocity floor used inside Reynolds numbers and cut sizes [m/s].
pub const VELOCITY_FLOOR: f64 = 1e-3;
/// Exponent of the fractional efficiency curve.
pub const EFFICIENCY_EXPONENT: f64 = 1.25;

/// Body dimensions relative to the diameter D.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycloneRatios {
    pub h_in: f64,
    pub w_in: f64,
    pub d_e: f64,
    pub h_e: f64,
    pub h_t: f64,
    pub h_c: f64,
    pub d_d: f64,
}

impl CycloneRatios {
    pub const STAIRMAND: CycloneRatios =
        CycloneRatios { h_in: 0.5, w_in: 0.2, d_e: 0.5, h_e: 0.5, h_t: 4.0, h_c: 2.5, d_d: 0.37 };
}

impl Default for CycloneRatios {
    fn default() -> Self {
        CycloneRatios::STAIRMAND
    }
}

/// Absolute dimensions [m] and derived areas and volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycloneGeometry {
    pub d: f64,
    pub h_in: f64,
    pub w_in: f64,
    pub d_e: f64,
    pub h_e: f64,
    pub h_t: f64,
    pub h_c: f64,
    pub d_d: f64,
    pub r_c: f64,
    /// Inlet area h_in w_in.
    pub a1: f64,
    /// Vortex finder area π d_e²/4.
    pub a2: f64,
    /// Separation annulus π (r_c² − r_m²).
    pub a3: f64,
    pub r_m: f64,
    /// Body volume.
    pub volume: f64,
    /// Total surface area.
    pub a_c: f64,
    /// Wall friction area of the efficiency model.
    pub a_w: f64,
}

impl CycloneGeometry {
    pub fn new(d: f64, ratios: &CycloneRatios) -> Result<Self> {
        let r = ratios;
        let all = [d, r.h_in, r.w_in, r.d_e, r.h_e, r.h_t, r.h_c, r.d_d];
        if all.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("cyclone dimensions must be positive".into()));
        }
        if r.d_e >= 1.0 || r.h_c >= r.h_t || r.d_d >= 1.0 || r.w_in >= 0.5 {
            return Err(Error::Config(
                "cyclone ratios must satisfy d_e < D, d_d < D, h_c < h_t and w_in < D/2".into(),
            ));
        }
        let g = Self::unchecked(d, r);
        if !(g.volume > 0.0) || g.r_m >= g.r_c {
            return Err(Error::Config("cyclone geometry has no positive body volume".into()));
        }
        Ok(g)
    }

    pub fn stairmand(d: f64) -> Self {
        Self::new(d, &CycloneRatios::STAIRMAND).expect("Stairmand ratios are valid")
    }

    fn unchecked(d: f64, r: &CycloneRatios) -> Self {
        let (h_in, w_in, d_e, h_e, h_t, h_c, d_d) =
            (r.h_in * d, r.w_in * d, r.d_e * d, r.h_e * d, r.h_t * d, r.h_c * d, r.d_d * d);
        let r_c = d / 2.0;
        let r_m = (r_c * d_e / 2.0).sqrt();
        let volume = PI
            * (r_c * r_c * (h_t - h_c) + h_c / 3.0 * (r_c * r_c + d_d * d_d / 4.0 + r_c * d_d / 2.0)
                - d_e * d_e / 4.0 * h_e);
        let a_c = 2.0 * PI * r_c * (h_t - h_c)
            + PI * (r_c * r_c - d_e * d_e / 4.0)
            + PI * (r_c + d_d / 2.0) * ((r_c - d_d / 2.0).powi(2) + h_c * h_c).sqrt();
        let r2 = r_c - 0.5 * (r_c - d_d / 2.0);
        let a_w = 2.0 * PI * r_c * (h_t - h_c) + PI * (r_c + r2) * ((r_c - r2).powi(2) + h_c * h_c / 4.0).sqrt();
        CycloneGeometry {
            d,
            h_in,
            w_in,
            d_e,
            h_e,
            h_t,
            h_c,
            d_d,
            r_c,
            a1: h_in * w_in,
            a2: PI * d_e * d_e / 4.0,
            a3: PI * (r_c * r_c - r_m * r_m),
            r_m,
            volume,
            a_c,
            a_w,
        }
    }

    /// K_A = π r_c² / (h_in w_in).
    pub fn k_a(&self) -> f64 {
        PI * self.r_c * self.r_c / self.a1
    }

    /// r̃_c = 0.38 d_e/D + 0.5 (d_e/D)².
    pub fn r_tilde_c(&self) -> f64 {
        let x = self.d_e / self.d;
        0.38 * x + 0.5 * x * x
    }

    /// R_cx = r̃_c D / d_e.
    pub fn r_cx(&self) -> f64 {
        self.r_tilde_c() * self.d / self.d_e
    }
}

/// Per-cyclone parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycloneParams {
    pub geometry: CycloneGeometry,
    /// Inlet expansion coefficient k_i.
    pub k_i: f64,
    /// Volumetric ambient loss [W/m³].
    pub q_amb: f64,
}

impl CycloneParams {
    pub fn stairmand(d: f64) -> Self {
        CycloneParams { geometry: CycloneGeometry::stairmand(d), k_i: 0.3, q_amb: 0.0 }
    }
}

impl Default for CycloneParams {
    fn default() -> Self {
        CycloneParams::stairmand(0.3)
    }
}

#[inline]
fn signed_square<S: Scalar>(v: S) -> S {
    v * (v * v + 1e-12).sqrt()
}

#[inline]
fn floored_speed<S: Scalar>(v: S) -> S {
    (v * v + VELOCITY_FLOOR * VELOCITY_FLOOR).sqrt()
}

/// Solid load fraction c₀ of an inlet stream (mass fraction of solids).
pub fn solid_load_fraction<S: Scalar>(thermo: &Thermo, f_in: &MolarVector<S>) -> S {
    let f = f_in.map(nonneg);
    let ms = thermo.phase_mass(Phase::Solid, &f);
    let total = thermo.density(&f);
    let safe = S::select(total.re() > 0.0, total, S::cst(1.0));
    S::select(total.re() > 0.0, ms / safe, S::zero())
}

/// f₀ = 0.005 (1 + 3 √c₀).
pub fn friction_factor<S: Scalar>(c0: S) -> S {
    (c0.max_s(S::cst(LOAD_EPS)).sqrt() * 3.0 + 1.0) * 0.005
}

/// Intermediate quantities of the swirl-loss correlation.
#[derive(Clone, Copy, Debug)]
pub struct SwirlTerms<S> {
    pub f0: S,
    pub re: S,
    pub n: S,
    pub v_theta_w: S,
}

pub fn swirl_terms<S: Scalar>(v1: S, rho_g: S, mu_g: S, c0: S, g: &CycloneGeometry) -> SwirlTerms<S> {
    let ka = g.k_a();
    let de_d = g.d_e / g.d;
    let f0 = friction_factor(c0);
    let re = rho_g * floored_speed(v1) * (2.0 * g.r_c) / (mu_g * (ka * de_d));
    let n = rsub(1.0, (re.powf(0.12) * (-0.26 * (1.0 + ((g.h_e - g.h_in) / g.w_in).abs()).powf(-0.5))).exp());
    let c0c = c0.max_s(S::cst(LOAD_EPS));
    let v_theta_w = re.powf(0.06) * (1.11 * ka.powf(-0.21) * de_d.powf(0.16))
        / ((c0c.powf(0.27) * 0.35 + 1.0) * (f0 * (g.a_c / (PI * g.r_c * g.r_c) * (ka * de_d).sqrt()) + 1.0));
    SwirlTerms { f0, re, n, v_theta_w }
}

/// Inlet expansion loss ΔP_a and swirl loss ΔP_b [Pa]. Both keep the sign
/// of v₁.
pub fn pressure_drop_ab<S: Scalar>(v1: S, rho_g: S, mu_g: S, c0: S, p: &CycloneParams) -> (S, S) {
    let g = &p.geometry;
    let dyn_p = rho_g * signed_square(v1) * 0.5;
    let a = (1.0 - p.k_i * g.w_in / (g.r_c - g.d_e / 2.0)).powi(2);
    let t = swirl_terms(v1, rho_g, mu_g, c0, g);
    let vt3 = t.v_theta_w * t.v_theta_w * t.v_theta_w;
    let de_pow = (t.n * (1.5 * (g.d_e / g.d).ln())).exp();
    let b = t.f0 * vt3 * (4.0 * g.k_a() * g.a_c) / (de_pow * (0.9 * PI * g.d * g.d));
    (dyn_p * a, dyn_p * b)
}

pub fn pressure_drop_ab_checked(v1: f64, rho_g: f64, mu_g: f64, c0: f64, p: &CycloneParams) -> Result<(f64, f64)> {
    let re = rho_g * v1.abs() * 2.0 * p.geometry.r_c / (mu_g * p.geometry.k_a() * p.geometry.d_e / p.geometry.d);
    if !(re > 0.0) && v1 != 0.0 || !(rho_g > 0.0 && mu_g > 0.0) {
        return Err(Error::Input(format!("cyclone Reynolds number must be positive (Re = {re})")));
    }
    Ok(pressure_drop_ab(v1, rho_g, mu_g, c0, p))
}

/// (2R³ − R² + 1)/(1 − R²)³, the outlet-tube loss coefficient.
pub fn outlet_loss_coefficient(r_cx: f64) -> f64 {
    let r2 = r_cx * r_cx;
    (2.0 * r2 * r_cx - r2 + 1.0) / (1.0 - r2).powi(3)
}

/// Outlet-tube dissipation loss ΔP_c [Pa], sign of v₂ kept.
pub fn pressure_drop_c<S: Scalar>(v2: S, rho_g: S, g: &CycloneGeometry) -> S {
    rho_g * signed_square(v2) * (0.5 * outlet_loss_coefficient(g.r_cx()))
}

pub fn pressure_drop_c_checked(v2: f64, rho_g: f64, g: &CycloneGeometry) -> Result<f64> {
    let r = g.r_cx();
    if (1.0 - r * r).abs() < 1e-9 {
        return Err(Error::Singularity(format!("outlet-tube loss undefined for R_cx = {r}")));
    }
    Ok(pressure_drop_c(v2, rho_g, g))
}

/// Wall axial (separation) velocity v₃.
pub fn separation_velocity<S: Scalar>(v1: S, g: &CycloneGeometry) -> S {
    v1 * (0.9 * g.a1 / g.a3)
}

/// Cut sizes and load limit of the efficiency model.
#[derive(Clone, Copy, Debug)]
pub struct EfficiencyTerms<S> {
    pub alpha: S,
    pub u_c: S,
    pub d_star: S,
    pub d_e_star: S,
    pub d_a: S,
    pub k: S,
    pub c0l: S,
    pub eta: S,
}

/// Separation efficiency η for solid load fraction `c0`.
pub fn separation_efficiency<S: Scalar>(
    c0: S,
    v1: S,
    rho_s: S,
    rho_g: S,
    mu: S,
    d_med: f64,
    g: &CycloneGeometry,
) -> S {
    efficiency_terms(c0, v1, rho_s, rho_g, mu, d_med, g).eta
}

pub fn efficiency_terms<S: Scalar>(
    c0: S,
    v1: S,
    rho_s: S,
    rho_g: S,
    mu: S,
    d_med: f64,
    g: &CycloneGeometry,
) -> EfficiencyTerms<S> {
    let n = EFFICIENCY_EXPONENT;
    let v1 = floored_speed(v1);
    let c0c = c0.max_s(S::cst(LOAD_EPS));
    let f0 = friction_factor(c0);
    let r_c = g.r_c;
    let beta = g.w_in / r_c;
    let r1 = r_c - g.w_in / 2.0;
    let r2 = r_c - 0.5 * (r_c - g.d_d / 2.0);
    let ri = g.d_e / 2.0;

    let inner = rsub(1.0, (c0c + 1.0).recip() * (beta * (2.0 - beta) * (1.0 - beta * beta)));
    let alpha = rsub(1.0, (inner.sqrt() * (beta * beta - 2.0 * beta) + 1.0).sqrt()) / beta;
    let u_c = v1 * (r1 / r_c) / alpha;
    let flow = v1 * g.a1;
    let u = |r: f64| u_c * (r_c / r) / (f0 * u_c * (g.a_w * (r_c / r).sqrt() / 2.0) / flow + 1.0);
    let d_rho = rho_s - rho_g;

    let d_star = (mu * flow * (18.0 * 0.9) / (u(ri) * u(ri) * d_rho * (2.0 * PI * (g.h_t - g.h_e)))).sqrt();
    let w_s50 = flow * (0.5 * 0.9 / g.a_w);
    let z_bar = u(r1) * u(r2) / (r1 * r2).sqrt();
    let d_e_star = (mu * w_s50 * 18.0 / (d_rho * z_bar)).sqrt();
    let d_a = d_e_star / 0.7f64.powf(1.0 / n);

    let k = S::select(c0c.re() >= 0.1, c0c.ln() * -0.10 - 0.11, S::cst(0.15));
    let c0l = d_star / d_med * ((c0c * 10.0).ln() * k).exp() * 0.025;
    let frac = (-(d_star / d_a).powf(n)).exp();
    let ratio = (c0l / c0c).min_s(S::cst(1.0));
    let loaded = rsub(1.0, ratio) + ratio * frac;
    let eta = S::select(c0.re() >= LOAD_EPS, loaded, frac).clamp_s(0.0, 1.0);
    EfficiencyTerms { alpha, u_c, d_star, d_e_star, d_a, k, c0l, eta }
}

/// Cyclone variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycloneState<S> {
    pub c: MolarVector<S>,
    pub u_s: S,
    pub u_g: S,
    pub t_s: S,
    pub t_g: S,
    pub p: S,
    pub p1: S,
    pub p2: S,
    pub v1: S,
    pub v2: S,
}

/// What enters the cyclone, as flows.
#[derive(Clone, Copy, Debug)]
pub struct CycloneInlet<S> {
    /// Inlet molar flows [mol/s].
    pub f_in: MolarVector<S>,
    /// Enthalpy flows of the inlet solid and gas [W].
    pub h_s_in: S,
    pub h_g_in: S,
    pub p_in: S,
    pub p_out: S,
}

impl<S: Scalar> CycloneInlet<S> {
    /// Single stream with one solid and one gas temperature.
    pub fn from_stream(thermo: &Thermo, f_in: MolarVector<S>, t_s: S, t_g: S, p_in: S, p_out: S) -> Self {
        CycloneInlet {
            f_in,
            h_s_in: thermo.phase_enthalpy(Phase::Solid, t_s, p_in, &f_in),
            h_g_in: thermo.phase_enthalpy(Phase::Gas, t_g, p_in, &f_in),
            p_in,
            p_out,
        }
    }
}

/// Lumped properties used by the pressure-drop and efficiency models.
#[derive(Clone, Copy, Debug)]
pub struct CycloneProps<S> {
    pub rho_s: S,
    pub rho_g: S,
    pub mu_g: S,
    pub vhat_s: S,
}

#[derive(Clone, Copy, Debug)]
pub struct CycloneEval<S> {
    pub dc: MolarVector<S>,
    pub du_s: S,
    pub du_g: S,
    /// Volume closure, U_s − û_s, U_g − û_g, three pressure drops, mean pressure.
    pub alg: [S; 7],
    /// Gas-outlet flows (gas plus unseparated solid) [mol/s].
    pub f2: MolarVector<S>,
    /// Separated solid flows [mol/s].
    pub f3: MolarVector<S>,
    pub v3: S,
}

pub struct Cyclone<'a> {
    pub thermo: &'a Thermo,
    pub kinetics: &'a KineticParams,
    pub params: &'a CycloneParams,
    pub d_med: f64,
    pub k_sg: f64,
}

impl<'a> Cyclone<'a> {
    pub fn props<S: Scalar>(&self, st: &CycloneState<S>) -> CycloneProps<S> {
        let th = self.thermo;
        let c = st.c.map(nonneg);
        let vhat_s = th.phase_volume(Phase::Solid, st.t_s, st.p, &c);
        let vhat_g = th.phase_volume(Phase::Gas, st.t_g, st.p, &c);
        let ms = th.phase_mass(Phase::Solid, &c);
        let safe_vs = S::select(vhat_s.re() > 0.0, vhat_s, S::cst(1.0));
        // an empty solid phase still needs a finite density for Δρ
        let rho_s_empty = th.solid_density(&std::array::from_fn(|i| S::cst((i == Q) as u8 as f64)), st.t_s, st.p);
        let rho_s = S::select(vhat_s.re() > 0.0, ms / safe_vs, rho_s_empty);
        let cg = c[B] + c[AIR];
        let safe = S::select(cg.re() > 0.0, cg, S::cst(1.0));
        let x = [
            S::select(cg.re() > 0.0, c[B] / safe, S::zero()),
            S::select(cg.re() > 0.0, c[AIR] / safe, S::cst(1.0)),
        ];
        CycloneProps {
            rho_s,
            rho_g: th.phase_mass(Phase::Gas, &c) / vhat_g,
            mu_g: th.gas_viscosity(st.t_g, x),
            vhat_s,
        }
    }

    pub fn efficiency<S: Scalar>(&self, st: &CycloneState<S>, props: &CycloneProps<S>, c0: S) -> S {
        separation_efficiency(c0, st.v1, props.rho_s, props.rho_g, props.mu_g, self.d_med, &self.params.geometry)
    }

    /// Separated and carried-over flows for efficiency `eta`.
    pub fn outlet_flows<S: Scalar>(&self, st: &CycloneState<S>, eta: S) -> (MolarVector<S>, MolarVector<S>) {
        let g = &self.params.geometry;
        let v3 = separation_velocity(st.v1, g);
        let mut f2 = [S::zero(); NSPECIES];
        let mut f3 = [S::zero(); NSPECIES];
        for &i in Phase::Solid.members() {
            f2[i] = st.v2 * rsub(1.0, eta) * st.c[i] * g.a2;
            f3[i] = v3 * eta * st.c[i] * g.a3;
        }
        for &i in Phase::Gas.members() {
            f2[i] = st.v2 * st.c[i] * g.a2;
        }
        (f2, f3)
    }

    pub fn algebraic_residuals<S: Scalar>(
        &self,
        st: &CycloneState<S>,
        props: &CycloneProps<S>,
        c0: S,
        p_in: S,
        p_out: S,
    ) -> [S; 7] {
        let th = self.thermo;
        let c = &st.c;
        let (dpa, dpb) = pressure_drop_ab(st.v1, props.rho_g, props.mu_g, c0, self.params);
        let dpc = pressure_drop_c(st.v2, props.rho_g, &self.params.geometry);
        [
            th.phase_volume(Phase::Solid, st.t_s, st.p, c) + th.phase_volume(Phase::Gas, st.t_g, st.p, c) - 1.0,
            th.phase_internal_energy(Phase::Solid, st.t_s, st.p, c) - st.u_s,
            th.phase_internal_energy(Phase::Gas, st.t_g, st.p, c) - st.u_g,
            dpa - (p_in - st.p1),
            dpb - (st.p1 - st.p2),
            dpc - (st.p2 - p_out),
            st.p - (st.p1 + st.p2) * 0.5,
        ]
    }

    /// Balances and algebraic residuals for a given efficiency.
    pub fn evaluate<S: Scalar>(
        &self,
        st: &CycloneState<S>,
        inlet: &CycloneInlet<S>,
        props: &CycloneProps<S>,
        c0: S,
        eta: S,
    ) -> CycloneEval<S> {
        let th = self.thermo;
        let g = &self.params.geometry;
        let vol = g.volume;
        let (f2, f3) = self.outlet_flows(st, eta);
        let c = st.c.map(nonneg);
        let r = self.kinetics.production_rate(&c, st.t_s);
        let dc = std::array::from_fn(|i| (inlet.f_in[i] - f2[i] - f3[i]) / vol + r[i]);
        let h2_s = th.phase_enthalpy(Phase::Solid, st.t_s, st.p, &f2);
        let h2_g = th.phase_enthalpy(Phase::Gas, st.t_g, st.p, &f2);
        let h3_s = th.phase_enthalpy(Phase::Solid, st.t_s, st.p, &f3);
        let j_sg = heat_exchange(props.vhat_s, st.t_g, st.t_s, self.k_sg, self.d_med);
        let q = self.params.q_amb;
        CycloneEval {
            dc,
            du_s: (inlet.h_s_in - h2_s - h3_s) / vol + j_sg - q,
            du_g: (inlet.h_g_in - h2_g) / vol - j_sg - q,
            alg: self.algebraic_residuals(st, props, c0, inlet.p_in, inlet.p_out),
            f2,
            f3,
            v3: separation_velocity(st.v1, g),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dual;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn stairmand() -> CycloneParams {
        CycloneParams::stairmand(0.3)
    }

    #[test]
    fn stairmand_geometry() {
        let g = CycloneGeometry::stairmand(0.3);
        assert_relative_eq!(g.volume, 0.05578702789566159, max_relative = 1e-12);
        assert_relative_eq!(g.a_c, 0.965155780269591, max_relative = 1e-12);
        assert_relative_eq!(g.a_w, 0.7242334305957554, max_relative = 1e-12);
        assert_relative_eq!(g.a3, 0.035342917352885174, max_relative = 1e-12);
        assert_relative_eq!(g.a1, 0.1 * 0.09, max_relative = 1e-12);
        assert_relative_eq!(g.a2, PI * 0.09 / 16.0, max_relative = 1e-12);
        assert_relative_eq!(g.r_cx(), 0.63, max_relative = 1e-12);
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        let r = CycloneRatios { h_c: 5.0, ..CycloneRatios::STAIRMAND };
        assert!(matches!(CycloneGeometry::new(0.3, &r), Err(Error::Config(_))));
        assert!(CycloneGeometry::new(-1.0, &CycloneRatios::STAIRMAND).is_err());
    }

    #[test]
    fn pressure_drops_match_hand_evaluation() {
        let p = stairmand();
        let (a, b) = pressure_drop_ab(20.0, 0.5, 3.5e-5, 0.26, &p);
        assert_relative_eq!(a, 57.76, max_relative = 1e-9);
        assert_relative_eq!(b, 95.59627214351714, max_relative = 1e-9);
        let c = pressure_drop_c(15.0, 0.5, &p.geometry);
        assert_relative_eq!(c, 282.88272866495345, max_relative = 1e-9);
    }

    #[test]
    fn pressure_drop_keeps_sign_of_flow() {
        let p = stairmand();
        let (a, b) = pressure_drop_ab(-20.0, 0.5, 3.5e-5, 0.26, &p);
        assert!(a < 0.0 && b < 0.0);
        assert!(pressure_drop_c(-5.0, 0.5, &p.geometry) < 0.0);
    }

    #[test]
    fn outlet_loss_singularity() {
        let g = CycloneGeometry { d_e: 0.3 * 1.24, ..CycloneGeometry::stairmand(0.3) };
        assert!((1.0 - g.r_cx().powi(2)).abs() < 1e-9);
        assert!(matches!(pressure_drop_c_checked(10.0, 0.5, &g), Err(Error::Singularity(_))));
        assert!(pressure_drop_c_checked(10.0, 0.5, &CycloneGeometry::stairmand(0.3)).is_ok());
    }

    #[test]
    fn nonpositive_reynolds_is_an_input_error() {
        assert!(matches!(pressure_drop_ab_checked(10.0, 0.0, 3e-5, 0.2, &stairmand()), Err(Error::Input(_))));
        assert!(matches!(pressure_drop_ab_checked(10.0, 0.5, -3e-5, 0.2, &stairmand()), Err(Error::Input(_))));
    }

    #[test]
    fn separation_velocity_value() {
        let g = CycloneGeometry::stairmand(0.3);
        assert_relative_eq!(separation_velocity(20.0, &g), 0.9 * 0.009 * 20.0 / g.a3, max_relative = 1e-14);
    }

    #[test]
    fn efficiency_matches_hand_evaluation() {
        let g = CycloneGeometry::stairmand(0.3);
        let t = efficiency_terms(0.26, 20.0, 2600.0, 0.5, 3.5e-5, 7.61e-6, &g);
        assert_relative_eq!(t.alpha, 0.7052162018115236, max_relative = 1e-9);
        assert_relative_eq!(t.d_star, 3.0881165302270313e-06, max_relative = 1e-6);
        assert_relative_eq!(t.d_a, 3.979577342241215e-06, max_relative = 1e-6);
        assert_relative_eq!(t.c0l, 0.010387282182389143, max_relative = 1e-6);
        assert_relative_eq!(t.eta, 0.9793341165114007, max_relative = 1e-6);
    }

    #[test]
    fn efficiency_without_load_uses_fractional_curve() {
        let g = CycloneGeometry::stairmand(0.3);
        let t = efficiency_terms(1e-9, 20.0, 2600.0, 0.5, 3.5e-5, 7.61e-6, &g);
        let frac = (-(t.d_star / t.d_a).powf(EFFICIENCY_EXPONENT)).exp();
        assert_relative_eq!(t.eta, frac, max_relative = 1e-14);
    }

    #[test]
    fn efficiency_small_load_branch() {
        let g = CycloneGeometry::stairmand(0.3);
        let t = efficiency_terms(0.05, 20.0, 2600.0, 0.5, 3.5e-5, 7.61e-6, &g);
        assert_eq!(t.k, 0.15);
        assert!(t.eta > 0.0 && t.eta < 1.0);
    }

    #[test]
    fn efficiency_gradient_is_finite() {
        let g = CycloneGeometry::stairmand(0.3);
        let v = Dual::<2>::variable(20.0, Some(0));
        let c0 = Dual::<2>::variable(0.26, Some(1));
        let e = separation_efficiency(c0, v, Dual::constant(2600.0), Dual::constant(0.5), Dual::constant(3.5e-5), 7.61e-6, &g);
        let h = 1e-5;
        let fd = (separation_efficiency(0.26, 20.0 + h, 2600.0, 0.5, 3.5e-5, 7.61e-6, &g)
            - separation_efficiency(0.26, 20.0 - h, 2600.0, 0.5, 3.5e-5, 7.61e-6, &g))
            / (2.0 * h);
        assert_relative_eq!(e.d[0], fd, max_relative = 1e-5);
        assert!(e.d[1].is_finite());
    }

    #[test]
    fn load_fraction_of_stream() {
        let th = Thermo::default();
        let m = *th.molar_masses();
        let f = [1.0, 0.0, 0.0, 2.0, 0.0];
        let c0 = solid_load_fraction(&th, &f);
        assert_relative_eq!(c0, m[0] / (m[0] + 2.0 * m[3]), max_relative = 1e-14);
        assert_eq!(solid_load_fraction(&th, &[0.0; NSPECIES]), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn efficiency_is_a_fraction(v1 in 1.0f64..30.0, c0 in 1e-4f64..0.5, d_med in 1e-6f64..5e-5) {
            let g = CycloneGeometry::stairmand(0.3);
            let eta = separation_efficiency(c0, v1, 2600.0, 0.5, 3.5e-5, d_med, &g);
            prop_assert!((0.0..=1.0).contains(&eta));
        }

        #[test]
        fn outlet_loss_identity(r in 1e-6f64..0.99) {
            let va = 1.0 / (1.0 - r * r);
            let vt2 = 2.0 * r.powi(3) / (1.0 - r * r).powi(3);
            let lhs = vt2 + va * va;
            prop_assert!((outlet_loss_coefficient(r) - lhs).abs() <= 1e-12 * lhs);
        }

        #[test]
        fn pressure_falls_through_the_cyclone(v1 in 0.0f64..30.0, v2 in 0.0f64..30.0, c0 in 0.0f64..0.5, rho in 0.3f64..1.3) {
            let p = stairmand();
            let (a, b) = pressure_drop_ab(v1, rho, 3e-5, c0, &p);
            let c = pressure_drop_c(v2, rho, &p.geometry);
            prop_assert!(a >= 0.0 && b >= 0.0 && c >= 0.0);
        }
    }
}
