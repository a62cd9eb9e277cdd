//! Static auxiliary units: circulation fan, purge, fresh-air mixer, electric
//! hot gas generator and ideal filter.

use crate::error::{Error, Result};
use crate::scalar::{rsub, Scalar};
use crate::thermo::{MolarVector, Phase, Thermo, NSPECIES};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FanSpec {
    pub eta_fan: f64,
    /// Shaft power [W].
    pub p_fan: f64,
}

impl FanSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_fan > 0.0 && self.eta_fan <= 1.0) {
            return Err(Error::Config(format!("fan efficiency {} outside (0, 1]", self.eta_fan)));
        }
        if !(self.p_fan >= 0.0) {
            return Err(Error::Input(format!("fan power {} W is negative", self.p_fan)));
        }
        Ok(())
    }

    /// Pressure rise delivered at volumetric flow `f_vol`.
    pub fn pressure_rise(&self, f_vol: f64) -> f64 {
        self.eta_fan * self.p_fan / f_vol
    }
}

/// A material stream at a single temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamSpec<S = f64> {
    /// Molar flows [mol/s].
    pub f: MolarVector<S>,
    pub t: S,
    pub p: S,
}

impl<S: Scalar> StreamSpec<S> {
    pub fn enthalpy(&self, thermo: &Thermo) -> S {
        thermo.mixture_enthalpy(self.t, self.p, &self.f)
    }
}

impl StreamSpec<f64> {
    pub fn validate(&self) -> Result<()> {
        if self.f.iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::Input("stream flows must be non-negative".into()));
        }
        Ok(())
    }
}

/// η_fan P_fan − F_vol (P1 − P5) [W].
pub fn fan_residual<S: Scalar>(f_vol: S, p1: S, p5: S, spec: &FanSpec) -> S {
    rsub(spec.eta_fan * spec.p_fan, f_vol * (p1 - p5))
}

/// Splits a stream into (purged, recirculated) parts.
pub fn purge_split<S: Scalar>(f_in: &MolarVector<S>, alpha: S) -> (MolarVector<S>, MolarVector<S>) {
    (f_in.map(|f| f * alpha), f_in.map(|f| f * rsub(1.0, alpha)))
}

pub fn purge_split_checked(f_in: &MolarVector, alpha: f64) -> Result<(MolarVector, MolarVector)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Input(format!("purge fraction {alpha} outside [0, 1]")));
    }
    Ok(purge_split(f_in, alpha))
}

pub fn mix_flows<S: Scalar>(a: &MolarVector<S>, b: &MolarVector<S>) -> MolarVector<S> {
    std::array::from_fn(|i| a[i] + b[i])
}

/// H(recirc) + H(fresh) − H(T_mix, f_recirc + f_fresh) [W].
pub fn mixer_residual<S: Scalar>(
    thermo: &Thermo,
    t_mix: S,
    recirc: &StreamSpec<S>,
    fresh: &StreamSpec<S>,
    p: S,
) -> S {
    let f = mix_flows(&recirc.f, &fresh.f);
    thermo.mixture_enthalpy(recirc.t, p, &recirc.f) + thermo.mixture_enthalpy(fresh.t, p, &fresh.f)
        - thermo.mixture_enthalpy(t_mix, p, &f)
}

pub fn mixer_residual_checked(
    thermo: &Thermo,
    t_mix: f64,
    recirc: &StreamSpec,
    fresh: &StreamSpec,
    p: f64,
) -> Result<f64> {
    recirc.validate()?;
    fresh.validate()?;
    if mix_flows(&recirc.f, &fresh.f).iter().sum::<f64>() <= 0.0 {
        return Err(Error::Singularity("mixer has no inflow".into()));
    }
    Ok(mixer_residual(thermo, t_mix, recirc, fresh, p))
}

/// H(T_in, f) + P_EHGG − H(T_out, f) [W].
pub fn heater_residual<S: Scalar>(thermo: &Thermo, t_out: S, inlet: &StreamSpec<S>, p_ehgg: S, p: S) -> S {
    thermo.mixture_enthalpy(inlet.t, p, &inlet.f) + p_ehgg - thermo.mixture_enthalpy(t_out, p, &inlet.f)
}

/// Ideal filter: (gas, dust).
pub fn filter<S: Scalar>(stream: &StreamSpec<S>) -> (StreamSpec<S>, StreamSpec<S>) {
    let mut gas = *stream;
    let mut dust = *stream;
    for i in 0..NSPECIES {
        if Phase::Solid.members().contains(&i) {
            gas.f[i] = S::zero();
        } else {
            dust.f[i] = S::zero();
        }
    }
    (gas, dust)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::{AIR, B};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn air(n: f64, t: f64) -> StreamSpec {
        let mut f = [0.0; NSPECIES];
        f[AIR] = n;
        StreamSpec { f, t, p: 1e5 }
    }

    #[test]
    fn fan_pressure_rise() {
        let spec = FanSpec { eta_fan: 0.8, p_fan: 1200.0 };
        assert_relative_eq!(spec.pressure_rise(0.5), 1920.0, max_relative = 1e-14);
        assert!(fan_residual(0.5, 1e5 + 1920.0, 1e5, &spec).abs() < 1e-9);
        let off = FanSpec { eta_fan: 0.8, p_fan: 0.0 };
        assert_eq!(fan_residual(0.5, 1e5, 1e5, &off), 0.0);
        let r = |p1: f64| fan_residual(0.5, p1, 1e5, &spec);
        assert_relative_eq!(r(1e5 + 20.0) - r(1e5 + 10.0), r(1e5 + 10.0) - r(1e5), max_relative = 1e-9);
    }

    #[test]
    fn fan_validation() {
        assert!(FanSpec { eta_fan: 1.2, p_fan: 1.0 }.validate().is_err());
        assert!(FanSpec { eta_fan: 0.8, p_fan: -1.0 }.validate().is_err());
        assert!(FanSpec { eta_fan: 1.0, p_fan: 0.0 }.validate().is_ok());
    }

    #[test]
    fn purge_cases() {
        let f = [0.0, 0.0, 0.0, 10.0, 0.0];
        assert_eq!(purge_split(&f, 0.0).1, f);
        assert_eq!(purge_split(&f, 1.0).1, [0.0; NSPECIES]);
        let (p, r) = purge_split(&f, 0.3);
        assert_relative_eq!(p[AIR], 3.0);
        assert_relative_eq!(r[AIR], 7.0);
        assert!(matches!(purge_split_checked(&f, 1.5), Err(Error::Input(_))));
    }

    #[test]
    fn mixer_equal_temperatures() {
        let th = Thermo::default();
        let a = air(1.0, 500.0);
        let mut b = air(0.0, 500.0);
        b.f[B] = 0.4;
        assert!(mixer_residual(&th, 500.0, &a, &b, 1e5).abs() < 1e-9);
        let none = air(0.0, 300.0);
        assert!(mixer_residual(&th, 500.0, &a, &none, 1e5).abs() < 1e-9);
    }

    #[test]
    fn mixer_matches_bisection() {
        let th = Thermo::default();
        let hot = air(1.0, 600.0);
        let cold = air(1.0, 300.0);
        let oracle = bisect(300.0, 600.0, |t| {
            th.molar_enthalpy(AIR, 600.0, 1e5) + th.molar_enthalpy(AIR, 300.0, 1e5) - 2.0 * th.molar_enthalpy(AIR, t, 1e5)
        });
        assert!(mixer_residual(&th, oracle, &hot, &cold, 1e5).abs() < 1e-6);
        assert!(oracle > 445.0 && oracle < 455.0);
    }

    #[test]
    fn degenerate_mixer() {
        let th = Thermo::default();
        let z = air(0.0, 300.0);
        assert!(matches!(mixer_residual_checked(&th, 300.0, &z, &z, 1e5), Err(Error::Singularity(_))));
    }

    #[test]
    fn heater_cases() {
        let th = Thermo::default();
        let mut gas = air(14.0, 580.0);
        gas.f[B] = 3.0;
        assert!(heater_residual(&th, 580.0, &gas, 0.0, 1e5).abs() < 1e-9);
        let t_out = bisect(580.0, 2000.0, |t| heater_residual(&th, t, &gas, 40e3, 1e5));
        assert!(t_out > 580.0);
        assert!(heater_residual(&th, t_out, &gas, 40e3, 1e5).abs() < 1e-6);
        assert!(heater_residual(&th, 700.0, &gas, 40e3, 1e5) > heater_residual(&th, 701.0, &gas, 40e3, 1e5));
    }

    #[test]
    fn filter_partitions_species() {
        let pure_gas = air(2.0, 400.0);
        assert_eq!(filter(&pure_gas).1.f, [0.0; NSPECIES]);
        let solid = StreamSpec { f: [1.0, 2.0, 0.0, 0.0, 3.0], t: 400.0, p: 1e5 };
        assert_eq!(filter(&solid).0.f, [0.0; NSPECIES]);
        let mixed = StreamSpec { f: [1.0, 2.0, 3.0, 4.0, 5.0], t: 400.0, p: 1e5 };
        let (g, d) = filter(&mixed);
        assert_eq!(g.f, [0.0, 0.0, 3.0, 4.0, 0.0]);
        assert_eq!(d.f, [1.0, 2.0, 0.0, 0.0, 5.0]);
        assert_eq!((g.t, d.p), (400.0, 1e5));
    }

    proptest! {
        #[test]
        fn static_units_conserve_mass(f in proptest::array::uniform5(0.0f64..10.0), alpha in 0.0f64..=1.0) {
            let (p, r) = purge_split(&f, alpha);
            let s = StreamSpec { f, t: 500.0, p: 1e5 };
            let (g, d) = filter(&s);
            for i in 0..NSPECIES {
                prop_assert!((p[i] + r[i] - f[i]).abs() <= 1e-12 * f[i].max(1.0));
                prop_assert_eq!(g.f[i] + d.f[i], f[i]);
            }
        }

        #[test]
        fn heater_never_cools(p_ehgg in 0.0f64..1e5, t_in in 300.0f64..900.0) {
            let th = Thermo::default();
            let gas = air(10.0, t_in);
            let t_out = bisect(t_in - 1.0, 3000.0, |t| heater_residual(&th, t, &gas, p_ehgg, 1e5));
            prop_assert!(t_out >= t_in - 1e-6);
        }
    }
}
