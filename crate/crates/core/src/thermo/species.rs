//! Species identifiers and the property-data file.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const NSPECIES: usize = 5;

/// Per-species amounts in the fixed order `AB2, A, B, air, Q`.
///
/// The same array type is used for concentrations [mol/m³], mole counts
/// [mol], molar fluxes [mol/(m² s)] and molar flows [mol/s].
pub type MolarVector<S = f64> = [S; NSPECIES];

pub const AB2: usize = 0;
pub const A: usize = 1;
pub const B: usize = 2;
pub const AIR: usize = 3;
pub const Q: usize = 4;

pub const SOLIDS: [usize; 3] = [AB2, A, Q];
pub const GASES: [usize; 2] = [B, AIR];

/// Reference temperature of the formation enthalpies [K].
pub const T_REF: f64 = 298.15;
/// Universal gas constant [J/(mol K)].
pub const R_GAS: f64 = 8.314462618;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpeciesId {
    Kaolinite,
    Metakaolin,
    Water,
    Air,
    Quartz,
}

impl SpeciesId {
    pub const ALL: [SpeciesId; NSPECIES] = [
        SpeciesId::Kaolinite,
        SpeciesId::Metakaolin,
        SpeciesId::Water,
        SpeciesId::Air,
        SpeciesId::Quartz,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn phase(self) -> Phase {
        match self {
            SpeciesId::Water | SpeciesId::Air => Phase::Gas,
            _ => Phase::Solid,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            SpeciesId::Kaolinite => "AB2",
            SpeciesId::Metakaolin => "A",
            SpeciesId::Water => "B",
            SpeciesId::Air => "air",
            SpeciesId::Quartz => "Q",
        }
    }
}

impl fmt::Display for SpeciesId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for SpeciesId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpeciesId::ALL
            .into_iter()
            .find(|sp| sp.symbol().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown species '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Solid,
    Gas,
}

impl Phase {
    pub fn members(self) -> &'static [usize] {
        match self {
            Phase::Solid => &SOLIDS,
            Phase::Gas => &GASES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CpForm {
    Poly6,
    Shomate,
}

#[derive(Clone, Debug, Deserialize)]
pub struct CpSegment {
    pub form: CpForm,
    #[serde(rename = "T_min")]
    pub t_min: f64,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    pub cp_coefficients: Vec<f64>,
}

impl CpSegment {
    fn validate(&self, owner: &str) -> Result<()> {
        let want = match self.form {
            CpForm::Poly6 => 6,
            CpForm::Shomate => 5,
        };
        if self.cp_coefficients.len() != want {
            return Err(Error::Config(format!(
                "{owner}: {:?} heat capacity needs {want} coefficients, got {}",
                self.form,
                self.cp_coefficients.len()
            )));
        }
        if !(self.t_min > 0.0 && self.t_min < self.t_max) {
            return Err(Error::Config(format!(
                "{owner}: heat-capacity range requires 0 < T_min < T_max"
            )));
        }
        Ok(())
    }

    fn cp<S: Scalar>(&self, t: S) -> S {
        let k = &self.cp_coefficients;
        match self.form {
            CpForm::Poly6 => {
                t * (t * k[2] + k[1]) + k[0] + t.recip() * k[3] + (t * t).recip() * k[4]
                    + t.sqrt().recip() * k[5]
            }
            CpForm::Shomate => {
                let x = t / 1000.0;
                x * (x * (x * k[3] + k[2]) + k[1]) + k[0] + (x * x).recip() * k[4]
            }
        }
    }

    /// Antiderivative of cp in T (arbitrary constant).
    fn antiderivative<S: Scalar>(&self, t: S) -> S {
        let k = &self.cp_coefficients;
        match self.form {
            CpForm::Poly6 => {
                t * k[0] + t * t * (k[1] / 2.0) + t * t * t * (k[2] / 3.0) + t.ln() * k[3]
                    - t.recip() * k[4]
                    + t.sqrt() * (2.0 * k[5])
            }
            CpForm::Shomate => {
                let x = t / 1000.0;
                let poly = x * (x * (x * (x * (k[3] / 4.0) + k[2] / 3.0) + k[1] / 2.0) + k[0]);
                (poly - x.recip() * k[4]) * 1000.0
            }
        }
    }
}

/// Piecewise heat-capacity curve with a continuous enthalpy integral.
/// Outside `[T_min, T_max]` of the whole curve, cp is held constant at the
/// end value.
#[derive(Clone, Debug)]
pub struct CpCurve {
    segments: Vec<CpSegment>,
    /// Integral of cp from the curve's T_min to the start of each segment.
    offsets: Vec<f64>,
}

impl CpCurve {
    pub fn new(mut segments: Vec<CpSegment>, owner: &str) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Config(format!("{owner}: empty heat-capacity curve")));
        }
        segments.sort_by(|a, b| a.t_min.total_cmp(&b.t_min));
        for s in &segments {
            s.validate(owner)?;
        }
        for w in segments.windows(2) {
            if (w[0].t_max - w[1].t_min).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "{owner}: heat-capacity segments must be contiguous ({} K vs {} K)",
                    w[0].t_max, w[1].t_min
                )));
            }
        }
        let mut offsets = Vec::with_capacity(segments.len());
        let mut acc = 0.0;
        for s in &segments {
            offsets.push(acc);
            acc += s.antiderivative(s.t_max) - s.antiderivative(s.t_min);
        }
        Ok(CpCurve { segments, offsets })
    }

    pub fn t_min(&self) -> f64 {
        self.segments[0].t_min
    }

    pub fn t_max(&self) -> f64 {
        self.segments[self.segments.len() - 1].t_max
    }

    fn segment_index(&self, t: f64) -> usize {
        self.segments
            .iter()
            .position(|s| t < s.t_max)
            .unwrap_or(self.segments.len() - 1)
    }

    pub fn cp<S: Scalar>(&self, t: S) -> S {
        let (lo, hi) = (self.t_min(), self.t_max());
        if t.re() < lo || t.re() > hi {
            log::warn!(target: "claycalc::thermo::clamp", "cp evaluated at {:.2} K outside [{lo}, {hi}] K; clamped", t.re());
        }
        let tc = t.clamp_s(lo, hi);
        self.segments[self.segment_index(tc.re())].cp(tc)
    }

    /// ∫ cp from the curve's T_min to `t`, with constant extrapolation of cp
    /// beyond either end.
    pub fn integral<S: Scalar>(&self, t: S) -> S {
        let (lo, hi) = (self.t_min(), self.t_max());
        let tv = t.re();
        if tv < lo {
            let cp_lo = self.segments[0].cp(lo);
            return (t - lo) * cp_lo;
        }
        if tv > hi {
            let last = self.segments.len() - 1;
            let s = &self.segments[last];
            let total = self.offsets[last] + s.antiderivative(hi) - s.antiderivative(s.t_min);
            return (t - hi) * s.cp(hi) + total;
        }
        let k = self.segment_index(tv);
        let s = &self.segments[k];
        s.antiderivative(t) - s.antiderivative(s.t_min) + self.offsets[k]
    }
}

/// Solid molar volume model `v = (v1 + v2 T) * scale`, or ideal gas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VolumeModel {
    Linear { v1: f64, v2: f64 },
    IdealGas,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sutherland {
    pub mu0: f64,
    pub t0: f64,
    pub s_mu: f64,
}

impl Sutherland {
    pub fn viscosity<S: Scalar>(&self, t: S) -> S {
        (t / self.t0).powf(1.5) * ((t + self.s_mu).recip() * (self.mu0 * (self.t0 + self.s_mu)))
    }
}

/// Thermophysical data for one species.
#[derive(Clone, Debug)]
pub struct SpeciesProperties {
    pub id: SpeciesId,
    pub name: String,
    pub molar_mass: f64,
    pub dh_form: f64,
    /// `(weight, curve)` pairs; a blended pseudo-species has several.
    pub heat_capacity: Vec<(f64, CpCurve)>,
    pub volume: VolumeModel,
    pub viscosity: Option<Sutherland>,
    /// Constant subtracted so that the enthalpy integral vanishes at 298.15 K.
    pub(crate) h_ref_offset: f64,
}

impl SpeciesProperties {
    pub fn t_min(&self) -> f64 {
        self.heat_capacity
            .iter()
            .map(|(_, c)| c.t_min())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn t_max(&self) -> f64 {
        self.heat_capacity
            .iter()
            .map(|(_, c)| c.t_max())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRoot {
    volume_unit_scale: f64,
    #[serde(default)]
    component: Vec<ComponentRecord>,
    species: Vec<SpeciesRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentRecord {
    name: String,
    segments: Vec<CpSegment>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlendPart {
    component: String,
    fraction: f64,
    molar_mass: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesRecord {
    id: String,
    name: String,
    phase: Phase,
    molar_mass: Option<f64>,
    #[serde(rename = "dH_form")]
    dh_form: f64,
    cp: Option<Vec<CpSegment>>,
    blend: Option<Vec<BlendPart>>,
    v1: Option<f64>,
    v2: Option<f64>,
    mu0: Option<f64>,
    #[serde(rename = "T0")]
    t0: Option<f64>,
    #[serde(rename = "S_mu")]
    s_mu: Option<f64>,
}

/// Parsed species data, indexed by [`SpeciesId::index`].
#[derive(Clone, Debug)]
pub struct SpeciesData {
    pub species: [SpeciesProperties; NSPECIES],
    pub volume_unit_scale: f64,
}

pub const BUNDLED_SPECIES_DATA: &str = include_str!("../../data/species.toml");

impl SpeciesData {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_SPECIES_DATA).expect("bundled species data is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let root: FileRoot =
            toml::from_str(text).map_err(|e| Error::Config(format!("species data: {e}")))?;
        if !(root.volume_unit_scale > 0.0) {
            return Err(Error::Config("volume_unit_scale must be > 0".into()));
        }
        let mut slots: [Option<SpeciesProperties>; NSPECIES] = Default::default();
        for rec in root.species {
            let id: SpeciesId = rec.id.parse()?;
            if rec.phase != id.phase() {
                return Err(Error::Config(format!("{id}: phase must be {:?}", id.phase())));
            }
            let (heat_capacity, molar_mass) = match (&rec.cp, &rec.blend) {
                (Some(segs), None) => {
                    let m = rec
                        .molar_mass
                        .ok_or_else(|| Error::Config(format!("{id}: missing molar_mass")))?;
                    (vec![(1.0, CpCurve::new(segs.clone(), &rec.name)?)], m)
                }
                (None, Some(parts)) => {
                    let total: f64 = parts.iter().map(|p| p.fraction).sum();
                    if (total - 1.0).abs() > 1e-9 {
                        return Err(Error::Config(format!("{id}: blend fractions sum to {total}")));
                    }
                    let mut curves = Vec::new();
                    let mut m = 0.0;
                    for p in parts {
                        let comp = root
                            .component
                            .iter()
                            .find(|c| c.name == p.component)
                            .ok_or_else(|| {
                                Error::Config(format!("{id}: unknown component '{}'", p.component))
                            })?;
                        curves.push((p.fraction, CpCurve::new(comp.segments.clone(), &comp.name)?));
                        m += p.fraction * p.molar_mass;
                    }
                    if let Some(given) = rec.molar_mass {
                        m = given;
                    }
                    (curves, m)
                }
                _ => {
                    return Err(Error::Config(format!(
                        "{id}: exactly one of 'cp' or 'blend' is required"
                    )))
                }
            };
            if !(molar_mass > 0.0) {
                return Err(Error::Config(format!("{id}: molar_mass must be > 0")));
            }
            let volume = match id.phase() {
                Phase::Solid => VolumeModel::Linear {
                    v1: rec
                        .v1
                        .ok_or_else(|| Error::Config(format!("{id}: solids need v1")))?,
                    v2: rec.v2.unwrap_or(0.0),
                },
                Phase::Gas => VolumeModel::IdealGas,
            };
            let viscosity = match (rec.mu0, rec.t0, rec.s_mu) {
                (Some(mu0), Some(t0), Some(s_mu)) => Some(Sutherland { mu0, t0, s_mu }),
                (None, None, None) => None,
                _ => {
                    return Err(Error::Config(format!(
                        "{id}: viscosity needs all of mu0, T0, S_mu"
                    )))
                }
            };
            if id.phase() == Phase::Gas && viscosity.is_none() {
                return Err(Error::Config(format!("{id}: gas species need viscosity data")));
            }
            let mut props = SpeciesProperties {
                id,
                name: rec.name,
                molar_mass,
                dh_form: rec.dh_form,
                heat_capacity,
                volume,
                viscosity,
                h_ref_offset: 0.0,
            };
            props.h_ref_offset = props
                .heat_capacity
                .iter()
                .map(|(w, c)| w * c.integral(T_REF))
                .sum();
            if slots[id.index()].replace(props).is_some() {
                return Err(Error::Config(format!("duplicate species record '{id}'")));
            }
        }
        let missing: Vec<_> = SpeciesId::ALL
            .iter()
            .filter(|sp| slots[sp.index()].is_none())
            .map(|sp| sp.symbol())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing species records: {missing:?}")));
        }
        let species = slots.map(|s| s.expect("checked above"));
        Ok(SpeciesData {
            species,
            volume_unit_scale: root.volume_unit_scale,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_data_parses_with_expected_ranges() {
        let data = SpeciesData::bundled();
        let kao = &data.species[AB2];
        assert_eq!(kao.id, SpeciesId::Kaolinite);
        assert_eq!(kao.t_min(), 298.0);
        assert_eq!(kao.t_max(), 700.0);
        let air = &data.species[AIR];
        assert!((air.molar_mass - 0.02896968).abs() < 1e-7);
        assert_eq!(air.heat_capacity.len(), 3);
    }

    #[test]
    fn unknown_species_is_a_configuration_error() {
        assert!(matches!("CaCO3".parse::<SpeciesId>(), Err(Error::Config(_))));
        assert_eq!("ab2".parse::<SpeciesId>().unwrap(), SpeciesId::Kaolinite);
    }

    #[test]
    fn missing_record_is_rejected() {
        let text = BUNDLED_SPECIES_DATA.replace("id = \"Q\"", "id = \"A\"");
        assert!(SpeciesData::parse(&text).is_err());
    }

    #[test]
    fn integral_is_continuous_across_segments() {
        let data = SpeciesData::bundled();
        let q = &data.species[Q].heat_capacity[0].1;
        let below = q.integral(847.0 - 1e-9);
        let above = q.integral(847.0 + 1e-9);
        assert!((below - above).abs() < 1e-3);
    }
}
