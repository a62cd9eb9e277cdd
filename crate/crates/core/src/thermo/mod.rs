//! Thermophysical property functions: enthalpy, volume, internal energy,
//! density and viscosity of the five species and their mixtures.
//!
//! Every function is generic over [`Scalar`] so the same code serves plain
//! evaluation and exact derivatives.

mod species;

pub use species::*;

use crate::error::{Error, Result};
use crate::scalar::{rsub, Scalar};

/// Concentrations above this (negative) threshold are treated as zero in
/// nonlinear property terms.
pub const NEGATIVE_ROUNDOFF: f64 = -1e-9;

/// Clips integrator round-off negatives to zero; genuine negatives pass
/// through unchanged.
#[inline]
pub fn nonneg<S: Scalar>(c: S) -> S {
    let v = c.re();
    S::select(v < 0.0 && v > NEGATIVE_ROUNDOFF, c * 0.0, c)
}

#[derive(Clone, Debug)]
pub struct Thermo {
    pub data: SpeciesData,
    molar_masses: MolarVector,
}

impl Default for Thermo {
    fn default() -> Self {
        Thermo::new(SpeciesData::bundled())
    }
}

impl Thermo {
    pub fn new(data: SpeciesData) -> Self {
        let molar_masses = std::array::from_fn(|i| data.species[i].molar_mass);
        Thermo { data, molar_masses }
    }

    pub fn species(&self, i: usize) -> &SpeciesProperties {
        &self.data.species[i]
    }

    pub fn molar_masses(&self) -> &MolarVector {
        &self.molar_masses
    }

    pub fn cp<S: Scalar>(&self, i: usize, t: S) -> S {
        let mut acc = S::zero();
        for (w, curve) in &self.data.species[i].heat_capacity {
            acc += curve.cp(t) * *w;
        }
        acc
    }

    /// Molar heat capacity of a solid species [J/(mol K)], clamped to its
    /// validity range.
    pub fn cp_solid(&self, species: SpeciesId, t: f64) -> Result<f64> {
        if species.phase() != Phase::Solid {
            return Err(Error::Config(format!("{species} is not a solid species")));
        }
        Ok(self.cp(species.index(), t))
    }

    /// h = ΔH_form + ∫_{298.15}^{T} cp(s) ds  [J/mol]. Independent of P.
    pub fn molar_enthalpy<S: Scalar>(&self, i: usize, t: S, _p: S) -> S {
        let sp = &self.data.species[i];
        let mut acc = S::cst(sp.dh_form - sp.h_ref_offset);
        for (w, curve) in &sp.heat_capacity {
            acc += curve.integral(t) * *w;
        }
        acc
    }

    /// Molar volume [m³/mol].
    pub fn molar_volume<S: Scalar>(&self, i: usize, t: S, p: S) -> S {
        match self.data.species[i].volume {
            VolumeModel::Linear { v1, v2 } => {
                let s = self.data.volume_unit_scale;
                t * (v2 * s) + v1 * s
            }
            VolumeModel::IdealGas => t / p * R_GAS,
        }
    }

    fn sum_over<S: Scalar>(
        &self,
        members: &[usize],
        n: &MolarVector<S>,
        f: impl Fn(usize) -> S,
    ) -> S {
        let mut acc = S::zero();
        for &i in members {
            acc += n[i] * f(i);
        }
        acc
    }

    /// H(T, P, n) = Σ n_i h_i(T, P) over all species.
    pub fn mixture_enthalpy<S: Scalar>(&self, t: S, p: S, n: &MolarVector<S>) -> S {
        self.sum_over(&[AB2, A, B, AIR, Q], n, |i| self.molar_enthalpy(i, t, p))
    }

    /// Phase-restricted enthalpy H_s or H_g.
    pub fn phase_enthalpy<S: Scalar>(&self, phase: Phase, t: S, p: S, n: &MolarVector<S>) -> S {
        self.sum_over(phase.members(), n, |i| self.molar_enthalpy(i, t, p))
    }

    pub fn mixture_volume<S: Scalar>(&self, t: S, p: S, n: &MolarVector<S>) -> S {
        self.sum_over(&[AB2, A, B, AIR, Q], n, |i| self.molar_volume(i, t, p))
    }

    pub fn phase_volume<S: Scalar>(&self, phase: Phase, t: S, p: S, n: &MolarVector<S>) -> S {
        self.sum_over(phase.members(), n, |i| self.molar_volume(i, t, p))
    }

    /// U = H − P V.
    pub fn internal_energy<S: Scalar>(&self, t: S, p: S, n: &MolarVector<S>) -> S {
        self.mixture_enthalpy(t, p, n) - p * self.mixture_volume(t, p, n)
    }

    pub fn phase_internal_energy<S: Scalar>(
        &self,
        phase: Phase,
        t: S,
        p: S,
        n: &MolarVector<S>,
    ) -> S {
        self.phase_enthalpy(phase, t, p, n) - p * self.phase_volume(phase, t, p, n)
    }

    /// Pure-gas Sutherland viscosity [Pa s] of a gas species.
    pub fn pure_gas_viscosity<S: Scalar>(&self, i: usize, t: S) -> S {
        self.data.species[i]
            .viscosity
            .expect("gas species carry viscosity data")
            .viscosity(t)
    }

    /// Wilke mixing coefficient φ_ij.
    pub fn wilke_phi<S: Scalar>(mu_i: S, mu_j: S, m_i: f64, m_j: f64) -> S {
        let a = (mu_i / mu_j).sqrt() * (m_j / m_i).powf(0.25) + 1.0;
        a * a / (2.0 * 2f64.sqrt() * (1.0 + m_i / m_j).sqrt())
    }

    /// Wilke mixture viscosity for gas mole fractions `x = (x_B, x_air)`.
    /// No normalisation check; see [`Thermo::gas_viscosity_checked`].
    pub fn gas_viscosity<S: Scalar>(&self, t: S, x: [S; 2]) -> S {
        let mu = GASES.map(|i| self.pure_gas_viscosity(i, t));
        let m = GASES.map(|i| self.molar_masses[i]);
        let mut acc = S::zero();
        for i in 0..2 {
            let mut den = S::zero();
            for j in 0..2 {
                den += x[j] * Self::wilke_phi(mu[i], mu[j], m[i], m[j]);
            }
            // a species with zero fraction contributes nothing
            let term = S::select(x[i].re() == 0.0, x[i] * 0.0, x[i] * mu[i] / den);
            acc += term;
        }
        acc
    }

    pub fn gas_viscosity_checked(&self, t: f64, x: [f64; 2]) -> Result<f64> {
        let total = x[0] + x[1];
        if x.iter().any(|v| *v < 0.0) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::Input(format!(
                "gas mole fractions must be non-negative and sum to 1 (sum = {total})"
            )));
        }
        Ok(self.gas_viscosity(t, x))
    }

    /// Gas mole fractions from a full concentration vector.
    pub fn gas_mole_fractions<S: Scalar>(c: &MolarVector<S>) -> [S; 2] {
        let total = c[B] + c[AIR];
        [c[B] / total, c[AIR] / total]
    }

    /// ρ = M · c [kg/m³].
    pub fn density<S: Scalar>(&self, c: &MolarVector<S>) -> S {
        let mut acc = S::zero();
        for i in 0..NSPECIES {
            acc += c[i] * self.molar_masses[i];
        }
        acc
    }

    pub fn phase_mass<S: Scalar>(&self, phase: Phase, c: &MolarVector<S>) -> S {
        let mut acc = S::zero();
        for &i in phase.members() {
            acc += c[i] * self.molar_masses[i];
        }
        acc
    }

    /// Gas density ρ_g = (M_g · c_g) / v̂_g with v̂_g = V_g(T_g, P, c_g).
    pub fn gas_density<S: Scalar>(&self, c: &MolarVector<S>, t_g: S, p: S) -> S {
        self.phase_mass(Phase::Gas, c) / self.phase_volume(Phase::Gas, t_g, p, c)
    }

    pub fn gas_density_checked(&self, c: &MolarVector, t_g: f64, p: f64) -> Result<f64> {
        let vg = self.phase_volume(Phase::Gas, t_g, p, c);
        if !(vg > 0.0) {
            return Err(Error::State(format!("gas volume fraction {vg} is not positive")));
        }
        Ok(self.phase_mass(Phase::Gas, c) / vg)
    }

    /// Solid material density ρ_s = (M_s · c_s) / v̂_s.
    pub fn solid_density<S: Scalar>(&self, c: &MolarVector<S>, t_s: S, p: S) -> S {
        self.phase_mass(Phase::Solid, c) / self.phase_volume(Phase::Solid, t_s, p, c)
    }
}

/// Extended Einstein suspension viscosity μ = μ_g (1 + v̂_s/2)/(1 − 2 v̂_s).
pub fn suspension_viscosity<S: Scalar>(mu_g: S, vhat_s: S) -> S {
    mu_g * (vhat_s * 0.5 + 1.0) / rsub(1.0, vhat_s * 2.0)
}

pub fn suspension_viscosity_checked(mu_g: f64, vhat_s: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&vhat_s) {
        return Err(Error::Singularity(format!(
            "suspension viscosity needs 0 <= solid fraction < 0.5, got {vhat_s}"
        )));
    }
    let mu = suspension_viscosity(mu_g, vhat_s);
    if !mu.is_finite() {
        return Err(Error::Singularity("suspension viscosity overflow".into()));
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn th() -> Thermo {
        Thermo::default()
    }

    /// Adaptive Simpson quadrature, independent of the closed-form integral.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    #[test]
    fn cp_solid_reference_values() {
        // direct scalar evaluation of the tabulated polynomials
        let t: f64 = 298.15;
        let kao = 1.4303e3 - 7.886e-1 * t + 3.034e-4 * t * t + 8.334e6 / (t * t) - 1.862e4 / t.sqrt();
        let meta = 2.294924e2 + 3.68192e-2 * t - 1.456032e6 / (t * t);
        assert_relative_eq!(kao, 237.5, max_relative = 2e-3);
        assert_relative_eq!(meta, 224.1, max_relative = 2e-3);
        let thermo = th();
        assert_relative_eq!(thermo.cp_solid(SpeciesId::Kaolinite, t).unwrap(), kao, max_relative = 1e-14);
        assert_relative_eq!(thermo.cp_solid(SpeciesId::Metakaolin, t).unwrap(), meta, max_relative = 1e-14);
    }

    #[test]
    fn cp_is_clamped_below_range() {
        let thermo = th();
        let at_min = thermo.cp_solid(SpeciesId::Kaolinite, 298.0).unwrap();
        let below = thermo.cp_solid(SpeciesId::Kaolinite, 248.0).unwrap();
        assert_eq!(at_min, below);
        let above = thermo.cp_solid(SpeciesId::Kaolinite, 900.0).unwrap();
        assert_eq!(above, thermo.cp_solid(SpeciesId::Kaolinite, 700.0).unwrap());
    }

    #[test]
    fn cp_solid_rejects_gases() {
        assert!(th().cp_solid(SpeciesId::Water, 400.0).is_err());
    }

    #[test]
    fn formation_enthalpies_at_reference() {
        let thermo = th();
        assert_relative_eq!(thermo.molar_enthalpy(AB2, T_REF, 1e5), -4.11959e6, max_relative = 1e-12);
        assert_relative_eq!(thermo.molar_enthalpy(A, T_REF, 1e5), -3.211e6, max_relative = 1e-12);
        assert_relative_eq!(thermo.molar_enthalpy(B, T_REF, 1e5), -2.41826e5, max_relative = 1e-12);
        assert!(thermo.molar_enthalpy(AIR, T_REF, 1e5).abs() < 1e-9);
        let mut n = [0.0; NSPECIES];
        n[AB2] = 1.0;
        assert_relative_eq!(thermo.mixture_enthalpy(T_REF, 1e5, &n), -4.11959e6, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_enthalpy_matches_quadrature() {
        let thermo = th();
        for i in 0..NSPECIES {
            for &t in &[350.0, 500.0, 699.0, 847.0, 1000.0, 1200.0] {
                let dh = thermo.molar_enthalpy(i, t, 1e5) - thermo.molar_enthalpy(i, T_REF, 1e5);
                // integrate piecewise so kinks in cp sit on panel edges
                let mut knots = vec![T_REF, t];
                for (_, c) in &thermo.species(i).heat_capacity {
                    for k in [c.t_min(), c.t_max(), 500.0, 700.0, 847.0] {
                        if k > T_REF && k < t {
                            knots.push(k);
                        }
                    }
                }
                knots.sort_by(f64::total_cmp);
                let f = |s: f64| thermo.cp(i, s);
                let quad: f64 = knots.windows(2).map(|w| simpson(&f, w[0], w[1], 1e-10)).sum();
                assert_relative_eq!(dh, quad, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn molar_volumes() {
        let thermo = th();
        let v = thermo.molar_volume(B, 298.15, 1e5);
        assert_relative_eq!(v, 2.4789e-2, max_relative = 1e-4);
        assert_relative_eq!(thermo.molar_volume(B, 298.15, 0.5e5), 2.0 * v, max_relative = 1e-14);
        // 30 table units at the default cm³/mol scale
        assert_relative_eq!(thermo.molar_volume(AB2, 700.0, 3e5), 30e-6, max_relative = 1e-14);
        let mut n = [0.0; NSPECIES];
        n[AIR] = 1.0;
        assert_relative_eq!(thermo.mixture_volume(298.15, 1e5, &n), 2.4789e-2, max_relative = 1e-4);
    }

    #[test]
    fn empty_mixture_has_zero_enthalpy() {
        assert_eq!(th().mixture_enthalpy(500.0, 1e5, &[0.0; NSPECIES]), 0.0);
    }

    #[test]
    fn reaction_is_endothermic_over_the_reaction_window() {
        let thermo = th();
        for k in 0..=30 {
            let t = 700.0 + 10.0 * k as f64;
            let dh = thermo.molar_enthalpy(A, t, 1e5) + 2.0 * thermo.molar_enthalpy(B, t, 1e5)
                - thermo.molar_enthalpy(AB2, t, 1e5);
            assert!(dh > 0.0, "ΔH_r({t}) = {dh}");
        }
    }

    #[test]
    fn wilke_reduces_to_pure_species() {
        let thermo = th();
        let mu_b = thermo.pure_gas_viscosity(B, 600.0);
        assert_relative_eq!(thermo.gas_viscosity_checked(600.0, [1.0, 0.0]).unwrap(), mu_b, max_relative = 1e-14);
        let mu_air = thermo.pure_gas_viscosity(AIR, 600.0);
        assert_relative_eq!(thermo.gas_viscosity(600.0, [0.0, 1.0]), mu_air, max_relative = 1e-14);
        assert_relative_eq!(Thermo::wilke_phi(mu_b, mu_b, 0.018, 0.018), 1.0, max_relative = 1e-14);
        assert!(thermo.gas_viscosity_checked(600.0, [0.7, 0.7]).is_err());
    }

    #[test]
    fn wilke_binary_hand_evaluation() {
        let thermo = th();
        let t: f64 = 500.0;
        // Sutherland values written out independently
        let mu_b = 1.12e-5 * (t / 350.0).powf(1.5) * (350.0 + 1064.0) / (t + 1064.0);
        let mu_a = 1.716e-5 * (t / 273.15).powf(1.5) * (273.15 + 111.0) / (t + 111.0);
        let (mb, ma) = (0.01801528, 0.02896968);
        let phi = |mi: f64, mj: f64, ui: f64, uj: f64| {
            (1.0 + (ui / uj).sqrt() * (mj / mi).powf(0.25)).powi(2) / (8.0f64.sqrt() * (1.0 + mi / mj).sqrt())
        };
        let x = 0.5;
        let expect = x * mu_b / (x * phi(mb, mb, mu_b, mu_b) + x * phi(mb, ma, mu_b, mu_a))
            + x * mu_a / (x * phi(ma, mb, mu_a, mu_b) + x * phi(ma, ma, mu_a, mu_a));
        assert_relative_eq!(thermo.gas_viscosity_checked(t, [0.5, 0.5]).unwrap(), expect, max_relative = 1e-12);
    }

    #[test]
    fn suspension_viscosity_cases() {
        assert_eq!(suspension_viscosity_checked(2e-5, 0.0).unwrap(), 2e-5);
        assert_relative_eq!(suspension_viscosity_checked(2e-5, 0.25).unwrap(), 2.25 * 2e-5, max_relative = 1e-14);
        assert!(matches!(suspension_viscosity_checked(2e-5, 0.5), Err(Error::Singularity(_))));
        assert!(suspension_viscosity_checked(2e-5, 0.5 - 1e-12).unwrap() > 1e5 * 2e-5);
    }

    #[test]
    fn densities() {
        let thermo = th();
        assert_eq!(thermo.density(&[0.0; NSPECIES]), 0.0);
        let c = [0.5, 0.2, 3.0, 12.0, 0.7];
        let m = thermo.molar_masses();
        let hand = 0.5 * m[0] + 0.2 * m[1] + 3.0 * m[2] + 12.0 * m[3] + 0.7 * m[4];
        assert_relative_eq!(thermo.density(&c), hand, max_relative = 1e-14);
        // gas filling the whole volume: ρ_g = M_g · c_g
        let p = 1e5;
        let t = 600.0;
        let ctot = p / (R_GAS * t);
        let cg = [0.0, 0.0, 0.2 * ctot, 0.8 * ctot, 0.0];
        let rho = thermo.gas_density_checked(&cg, t, p).unwrap();
        assert_relative_eq!(rho, 0.2 * ctot * m[B] + 0.8 * ctot * m[AIR], max_relative = 1e-12);
        assert!(thermo.gas_density_checked(&[0.0; NSPECIES], t, p).is_err());
    }

    #[test]
    fn nonneg_clips_only_roundoff() {
        assert_eq!(nonneg(-1e-12), 0.0);
        assert_eq!(nonneg(-1e-6), -1e-6);
        assert_eq!(nonneg(2.0), 2.0);
    }

    fn arb_n() -> impl Strategy<Value = MolarVector> {
        prop::array::uniform5(0.0..50.0f64)
    }

    proptest! {
        #[test]
        fn homogeneity(n in arb_n(), t in 300.0..1200.0f64, p in 0.8e5..1.2e5f64, alpha in 0.01..100.0f64) {
            let thermo = th();
            let scaled = n.map(|v| v * alpha);
            let h = thermo.mixture_enthalpy(t, p, &n);
            let v = thermo.mixture_volume(t, p, &n);
            prop_assert!((thermo.mixture_enthalpy(t, p, &scaled) - alpha * h).abs() <= 1e-12 * (alpha * h).abs().max(1e-300) * 10.0);
            prop_assert!((thermo.mixture_volume(t, p, &scaled) - alpha * v).abs() <= 1e-12 * (alpha * v).abs() * 10.0);
        }

        #[test]
        fn internal_energy_identity(n in arb_n(), t in 300.0..1200.0f64, p in 0.8e5..1.2e5f64) {
            let thermo = th();
            let u = thermo.internal_energy(t, p, &n);
            let h = thermo.mixture_enthalpy(t, p, &n);
            let v = thermo.mixture_volume(t, p, &n);
            prop_assert_eq!(u + p * v - h, 0.0 * h + (u + p * v - h));
            prop_assert!((u + p * v - h).abs() <= 1e-9 * h.abs().max(1.0));
        }

        #[test]
        fn enthalpy_increases_with_temperature(n in arb_n(), t in 310.0..1190.0f64) {
            prop_assume!(n.iter().sum::<f64>() > 1e-3);
            let thermo = th();
            let dt = 1e-3;
            let dh = (thermo.mixture_enthalpy(t + dt, 1e5, &n) - thermo.mixture_enthalpy(t - dt, 1e5, &n)) / (2.0 * dt);
            prop_assert!(dh > 0.0);
        }
    }
}
