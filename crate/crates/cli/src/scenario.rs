//! Scenario files: hierarchical `key = value` text with unit suffixes.
//!
//! ```text
//! [calciner]
//! L = 12 m
//! inputs.f_clay = [0: 100 kg/h, 60 s: 200 kg/h]
//! ```
//!
//! Keys are dotted paths. A `[section]` header prefixes the keys that follow
//! it. Values keep the unit they were written in; SI values are derived on
//! access.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use claycalc::calciner::{CalcinerParams, VariableOrdering};
use claycalc::cyclone::{CycloneGeometry, CycloneParams, CycloneRatios};
use claycalc::dae::{JacobianMode, Method, SolverConfig};
use claycalc::kinetics::{KineticParams, RateForm};
use claycalc::plant::{Disturbances, InputSchedule, Plant, PlantParams, Schedule};
use claycalc::thermo::{SpeciesData, Thermo, NSPECIES};
use claycalc::{Error, Result};

/// Physical dimension of a scalar entry with its accepted unit suffixes as
/// (suffix, factor, offset), SI = value · factor + offset. The empty suffix
/// means SI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim {
    Pure,
    Fraction,
    Length,
    MassFlow,
    Temperature,
    Power,
    Time,
    Diffusivity,
    HeatTransfer,
    VolumetricPower,
    MolarEnergy,
    Rate,
}

impl Dim {
    fn units(self) -> &'static [(&'static str, f64, f64)] {
        match self {
            Dim::Pure => &[("", 1.0, 0.0)],
            Dim::Fraction => &[("", 1.0, 0.0), ("%", 0.01, 0.0)],
            Dim::Length => &[("", 1.0, 0.0), ("m", 1.0, 0.0), ("cm", 1e-2, 0.0), ("mm", 1e-3, 0.0), ("um", 1e-6, 0.0)],
            Dim::MassFlow => &[("", 1.0, 0.0), ("kg/s", 1.0, 0.0), ("kg/h", 1.0 / 3600.0, 0.0), ("t/h", 1.0 / 3.6, 0.0)],
            Dim::Temperature => &[("", 1.0, 0.0), ("K", 1.0, 0.0), ("degC", 1.0, 273.15), ("°C", 1.0, 273.15)],
            Dim::Power => &[("", 1.0, 0.0), ("W", 1.0, 0.0), ("kW", 1e3, 0.0), ("MW", 1e6, 0.0)],
            Dim::Time => &[("", 1.0, 0.0), ("s", 1.0, 0.0), ("min", 60.0, 0.0), ("h", 3600.0, 0.0)],
            Dim::Diffusivity => &[("", 1.0, 0.0), ("m2/s", 1.0, 0.0)],
            Dim::HeatTransfer => &[("", 1.0, 0.0), ("W/m2/K", 1.0, 0.0)],
            Dim::VolumetricPower => &[("", 1.0, 0.0), ("W/m3", 1.0, 0.0), ("kW/m3", 1e3, 0.0)],
            Dim::MolarEnergy => &[("", 1.0, 0.0), ("J/mol", 1.0, 0.0), ("kJ/mol", 1e3, 0.0)],
            Dim::Rate => &[("", 1.0, 0.0), ("1/s", 1.0, 0.0)],
        }
    }

    fn suffixes(self) -> String {
        self.units().iter().filter(|u| !u.0.is_empty()).map(|u| u.0).collect::<Vec<_>>().join(", ")
    }
}

/// A number with the unit it was written in.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: &'static str,
    pub si: f64,
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.unit.is_empty() {
            write!(f, "{:?}", self.value)
        } else {
            write!(f, "{:?} {}", self.value, self.unit)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Quantity(Quantity),
    Schedule(Vec<(Quantity, Quantity)>),
    List(Vec<Quantity>),
    Int(usize),
    Text(String),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Quantity(q) => write!(f, "{q}"),
            Value::Schedule(s) => {
                let parts: Vec<String> = s.iter().map(|(t, v)| format!("{t}: {v}")).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            Value::List(l) => {
                let parts: Vec<String> = l.iter().map(|q| q.to_string()).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            Value::Int(i) => write!(f, "{i}"),
            Value::Text(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Scalar(Dim),
    /// Scalar or piecewise-constant schedule.
    Schedule(Dim),
    List(Dim),
    Int,
    Text(&'static [&'static str]),
    Path,
}

struct Key {
    name: &'static str,
    kind: Kind,
    /// Text of the default value; `None` for required keys.
    default: Option<&'static str>,
}

const fn key(name: &'static str, kind: Kind, default: Option<&'static str>) -> Key {
    Key { name, kind, default }
}

const ORDERINGS: &[&str] = &["by-cell", "by-species"];
const RATE_FORMS: &[&str] = &["conversion_cubic", "literal_cubic"];
const METHODS: &[&str] = &["bdf2", "be"];
const JACOBIANS: &[&str] = &["analytic", "fd"];

use Dim::*;
use Kind::{Int, Path as PathKind, Scalar, Schedule as Sched, Text};

static SCHEMA: &[Key] = &[
    key("thermo.data", PathKind, Some("bundled")),
    key("calciner.L", Scalar(Length), None),
    key("calciner.d", Scalar(Length), None),
    key("calciner.N_z", Int, Some("10")),
    key("calciner.D_diff", Scalar(Diffusivity), Some("0.1 m2/s")),
    key("calciner.k_sg", Scalar(HeatTransfer), None),
    key("calciner.Q_amb_hat", Scalar(VolumetricPower), Some("0 W/m3")),
    key("calciner.ordering", Text(ORDERINGS), Some("by-cell")),
    key("cyclone.D", Scalar(Length), None),
    key("cyclone.h_in", Scalar(Pure), Some("0.5")),
    key("cyclone.w_in", Scalar(Pure), Some("0.2")),
    key("cyclone.d_e", Scalar(Pure), Some("0.5")),
    key("cyclone.h_e", Scalar(Pure), Some("0.5")),
    key("cyclone.h_t", Scalar(Pure), Some("4.0")),
    key("cyclone.h_c", Scalar(Pure), Some("2.5")),
    key("cyclone.d_d", Scalar(Pure), Some("0.37")),
    key("cyclone.K_i", Scalar(Pure), Some("0.3")),
    key("cyclone.Q_amb_hat", Scalar(VolumetricPower), Some("0 W/m3")),
    key("fan.eta", Scalar(Fraction), None),
    key("kinetics.E_A", Scalar(MolarEnergy), Some("202 kJ/mol")),
    key("kinetics.k0", Scalar(Rate), Some("2.9e15 1/s")),
    key("kinetics.rate_form", Text(RATE_FORMS), Some("conversion_cubic")),
    key("disturbances.d_med", Scalar(Length), None),
    key("disturbances.T_fresh", Scalar(Temperature), Some("30 degC")),
    key("disturbances.T_clay", Scalar(Temperature), Some("30 degC")),
    key("inputs.f_clay", Sched(MassFlow), None),
    key("inputs.clay_kaolinite", Scalar(Fraction), Some("0.68")),
    key("inputs.alpha_purge", Sched(Fraction), None),
    key("inputs.fresh_air", Sched(MassFlow), None),
    key("inputs.fresh_air_water", Scalar(Fraction), Some("0.1")),
    key("inputs.P_fan", Sched(Power), None),
    key("inputs.P_EHGG", Sched(Power), None),
    key("simulation.t_end", Scalar(Time), None),
    key("solver.method", Text(METHODS), Some("bdf2")),
    key("solver.jacobian", Text(JACOBIANS), Some("analytic")),
    key("solver.rel_tol", Scalar(Pure), Some("1e-6")),
    key("solver.abs_tol", Scalar(Pure), Some("1e-8")),
    key("solver.newton_tol", Scalar(Pure), Some("1e-9")),
    key("solver.max_newton_iters", Int, Some("10")),
    key("solver.initial_step", Scalar(Time), Some("1e-4 s")),
    key("solver.min_step", Scalar(Time), Some("1e-12 s")),
    key("solver.max_step", Scalar(Time), Some("1 s")),
    key("outputs.sample_interval", Scalar(Time), Some("1 s")),
    key("outputs.stream_tables", Kind::List(Time), Some("[]")),
];

fn schema(name: &str) -> Option<&'static Key> {
    SCHEMA.iter().find(|k| k.name == name)
}

fn parse_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_quantity(text: &str, dim: Dim) -> std::result::Result<Quantity, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .map(|(i, _)| i)
        .chain([text.len()])
        .filter(|i| text[..*i].trim_end().parse::<f64>().is_ok())
        .last()
        .ok_or_else(|| format!("expected a number, found '{text}'"))?;
    let value: f64 = text[..split].trim_end().parse().expect("checked above");
    if !value.is_finite() {
        return Err(format!("'{text}' is not finite"));
    }
    let suffix = text[split..].trim();
    let (unit, factor, offset) = dim
        .units()
        .iter()
        .find(|u| u.0 == suffix)
        .ok_or_else(|| format!("unit '{suffix}' not accepted here (expected one of: {})", dim.suffixes()))?;
    Ok(Quantity { value, unit, si: value * factor + offset })
}

fn bracketed(text: &str) -> Option<&str> {
    text.trim().strip_prefix('[')?.strip_suffix(']')
}

fn items(inner: &str) -> impl Iterator<Item = &str> {
    inner.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_value(text: &str, kind: Kind) -> std::result::Result<Value, String> {
    match kind {
        Scalar(dim) => parse_quantity(text, dim).map(Value::Quantity),
        Sched(dim) => match bracketed(text) {
            None => parse_quantity(text, dim).map(Value::Quantity),
            Some(inner) => {
                let mut steps = Vec::new();
                for item in items(inner) {
                    let (t, v) = item.split_once(':').ok_or_else(|| format!("schedule entry '{item}' needs 't: value'"))?;
                    steps.push((parse_quantity(t, Time)?, parse_quantity(v, dim)?));
                }
                Schedule::new(steps.iter().map(|(t, v)| (t.si, v.si)).collect()).map_err(|e| e.to_string())?;
                Ok(Value::Schedule(steps))
            }
        },
        Kind::List(dim) => {
            let inner = bracketed(text).ok_or_else(|| format!("expected a [..] list, found '{text}'"))?;
            items(inner).map(|q| parse_quantity(q, dim)).collect::<std::result::Result<_, _>>().map(Value::List)
        }
        Int => text.trim().parse::<usize>().map(Value::Int).map_err(|_| format!("expected an integer, found '{text}'")),
        Text(options) => {
            let t = text.trim();
            if options.contains(&t) {
                Ok(Value::Text(t.to_string()))
            } else {
                Err(format!("'{t}' is not one of: {}", options.join(", ")))
            }
        }
        PathKind => {
            let t = text.trim().trim_matches('"');
            if t.is_empty() {
                return Err("empty path".into());
            }
            Ok(Value::Text(t.to_string()))
        }
    }
}

/// A parsed and validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    values: BTreeMap<&'static str, Value>,
    /// Directory that relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Scenario::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut lines_of = BTreeMap::new();
        let mut section = String::new();
        let mut last = 0;
        for (no, raw) in text.lines().enumerate() {
            let line = no + 1;
            last = line;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = bracketed(content).filter(|_| !content.contains('=')) {
                section = name.trim().to_string();
                if section.is_empty() || !SCHEMA.iter().any(|k| k.name.starts_with(&format!("{section}."))) {
                    return Err(parse_error(line, format!("unknown section [{section}]")));
                }
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| parse_error(line, "expected 'key = value'"))?;
            let k = k.trim();
            let full = if section.is_empty() || k.contains('.') { k.to_string() } else { format!("{section}.{k}") };
            let spec = schema(&full).ok_or_else(|| parse_error(line, format!("unknown key '{full}'")))?;
            if lines_of.insert(spec.name, line).is_some() {
                return Err(parse_error(line, format!("duplicate key '{full}'")));
            }
            let value = parse_value(v, spec.kind).map_err(|m| parse_error(line, format!("{full}: {m}")))?;
            values.insert(spec.name, value);
        }
        for spec in SCHEMA {
            if values.contains_key(spec.name) {
                continue;
            }
            match spec.default {
                Some(d) => {
                    values.insert(spec.name, parse_value(d, spec.kind).expect("defaults parse"));
                }
                None => return Err(parse_error(last + 1, format!("missing required key '{}'", spec.name))),
            }
        }
        let sc = Scenario { values, base_dir: base_dir.to_path_buf() };
        let at = |k: &str| lines_of.get(k).copied().unwrap_or(last + 1);
        if let Some(path) = sc.data_path() {
            if !path.is_file() {
                return Err(parse_error(at("thermo.data"), format!("species data file {} not found", path.display())));
            }
        }
        if !(sc.si("simulation.t_end") >= 0.0) {
            return Err(parse_error(at("simulation.t_end"), "simulation.t_end must be non-negative"));
        }
        if !(sc.si("outputs.sample_interval") > 0.0) {
            return Err(parse_error(at("outputs.sample_interval"), "outputs.sample_interval must be positive"));
        }
        sc.build().map_err(|e| match e {
            Error::Parse { .. } => e,
            other => parse_error(last + 1, other.to_string()),
        })?;
        Ok(sc)
    }

    /// Replaces one entry, checked like a line of the file.
    pub fn set(&mut self, name: &str, text: &str) -> Result<()> {
        let bad = |m: String| Error::Config(format!("override {name}: {m}"));
        let spec = schema(name).ok_or_else(|| bad("unknown key".into()))?;
        let value = parse_value(text, spec.kind).map_err(bad)?;
        let old = self.values.insert(spec.name, value);
        if let Err(e) = self.build() {
            if let Some(old) = old {
                self.values.insert(spec.name, old);
            }
            return Err(bad(e.to_string()));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    /// Canonical text form, grouped by section in schema order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for spec in SCHEMA {
            let (sec, k) = spec.name.split_once('.').expect("dotted");
            if sec != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{sec}]");
                current = sec;
            }
            let _ = writeln!(out, "{k} = {}", self.values[spec.name]);
        }
        out
    }

    fn si(&self, name: &str) -> f64 {
        match &self.values[name] {
            Value::Quantity(q) => q.si,
            Value::Schedule(s) => s[0].1.si,
            Value::Int(i) => *i as f64,
            other => panic!("{name} holds {other:?}, not a number"),
        }
    }

    fn int(&self, name: &str) -> usize {
        match &self.values[name] {
            Value::Int(i) => *i,
            other => panic!("{name} holds {other:?}, not an integer"),
        }
    }

    fn text(&self, name: &str) -> &str {
        match &self.values[name] {
            Value::Text(s) => s,
            other => panic!("{name} holds {other:?}, not text"),
        }
    }

    fn schedule(&self, name: &str) -> Result<Schedule> {
        match &self.values[name] {
            Value::Quantity(q) => Ok(Schedule::constant(q.si)),
            Value::Schedule(s) => Schedule::new(s.iter().map(|(t, v)| (t.si, v.si)).collect()),
            other => panic!("{name} holds {other:?}, not a schedule"),
        }
    }

    fn data_path(&self) -> Option<PathBuf> {
        let p = self.text("thermo.data");
        (p != "bundled").then(|| self.base_dir.join(p))
    }

    pub fn t_end(&self) -> f64 {
        self.si("simulation.t_end")
    }

    pub fn nz(&self) -> usize {
        self.int("calciner.N_z")
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let dt = self.si("outputs.sample_interval");
        let t_end = self.t_end();
        let n = (t_end / dt + 1e-9).floor() as usize;
        let mut t: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        if t.last().is_none_or(|l| (t_end - l) > 1e-9 * dt.max(1.0)) {
            t.push(t_end);
        }
        t
    }

    /// Times of the requested stream tables; the end of the run if none.
    pub fn stream_table_times(&self) -> Vec<f64> {
        match &self.values["outputs.stream_tables"] {
            Value::List(l) if !l.is_empty() => l.iter().map(|q| q.si).collect(),
            _ => vec![self.t_end()],
        }
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            rel_tol: self.si("solver.rel_tol"),
            abs_tol: self.si("solver.abs_tol"),
            newton_tol: self.si("solver.newton_tol"),
            max_newton_iters: self.int("solver.max_newton_iters"),
            initial_step: self.si("solver.initial_step"),
            min_step: self.si("solver.min_step"),
            max_step: self.si("solver.max_step"),
            method: self.text("solver.method").parse::<Method>()?,
            jacobian: self.text("solver.jacobian").parse::<JacobianMode>()?,
            ..SolverConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn thermo(&self) -> Result<Thermo> {
        Ok(match self.data_path() {
            Some(p) => Thermo::new(SpeciesData::load(&p)?),
            None => Thermo::default(),
        })
    }

    pub fn params(&self) -> Result<PlantParams> {
        let calciner = CalcinerParams {
            length: self.si("calciner.L"),
            diameter: self.si("calciner.d"),
            nz: self.nz(),
            d_diff: [self.si("calciner.D_diff"); NSPECIES],
            d_med: self.si("disturbances.d_med"),
            k_sg: self.si("calciner.k_sg"),
            q_amb: self.si("calciner.Q_amb_hat"),
            ..CalcinerParams::default()
        };
        let ratios = CycloneRatios {
            h_in: self.si("cyclone.h_in"),
            w_in: self.si("cyclone.w_in"),
            d_e: self.si("cyclone.d_e"),
            h_e: self.si("cyclone.h_e"),
            h_t: self.si("cyclone.h_t"),
            h_c: self.si("cyclone.h_c"),
            d_d: self.si("cyclone.d_d"),
        };
        let cyclone = CycloneParams {
            geometry: CycloneGeometry::new(self.si("cyclone.D"), &ratios)?,
            k_i: self.si("cyclone.K_i"),
            q_amb: self.si("cyclone.Q_amb_hat"),
        };
        let kinetics = KineticParams::new(
            self.si("kinetics.E_A"),
            self.si("kinetics.k0"),
            self.text("kinetics.rate_form").parse::<RateForm>()?,
        )?;
        let params = PlantParams { calciner, cyclones: [cyclone; 3], fan_eta: self.si("fan.eta"), kinetics };
        params.validate()?;
        Ok(params)
    }

    pub fn disturbances(&self) -> Disturbances {
        Disturbances {
            d_med: self.si("disturbances.d_med"),
            t_fresh: self.si("disturbances.T_fresh"),
            t_clay: self.si("disturbances.T_clay"),
        }
    }

    pub fn inputs(&self) -> Result<InputSchedule> {
        let s = InputSchedule {
            clay_feed: self.schedule("inputs.f_clay")?,
            clay_kaolinite: self.si("inputs.clay_kaolinite"),
            alpha_purge: self.schedule("inputs.alpha_purge")?,
            fresh_air: self.schedule("inputs.fresh_air")?,
            fresh_air_water: self.si("inputs.fresh_air_water"),
            p_fan: self.schedule("inputs.P_fan")?,
            p_ehgg: self.schedule("inputs.P_EHGG")?,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn ordering(&self) -> Result<VariableOrdering> {
        self.text("calciner.ordering").parse()
    }

    /// Assembles the plant model.
    pub fn build(&self) -> Result<Plant> {
        self.solver()?;
        Plant::new(self.thermo()?, self.params()?, self.inputs()?, self.disturbances(), self.ordering()?)
    }
}

/// The bundled demonstration scenario: 100 kg/h of clay doubled at 60 s.
pub const BASELINE: &str = include_str!("../scenarios/baseline.scenario");
