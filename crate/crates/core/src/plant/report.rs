use super::{Plant, PlantEval};
use crate::thermo::{MolarVector, Phase, Thermo, A, AB2, B, NSPECIES};

/// Calcined clay production and its calcination degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantOutputs {
    /// Production rate CC [kg/s].
    pub cc: f64,
    /// Calcination degree CD [–], metakaolin over kaolinite plus metakaolin by mass.
    pub cd: f64,
}

/// One row of the stream table. Flows in kg/h, pressure in bar,
/// temperatures in °C, mass fractions in %.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamRow {
    pub name: &'static str,
    pub f_s: f64,
    pub f_g: f64,
    pub p: Option<f64>,
    pub t_s: Option<f64>,
    pub t_g: Option<f64>,
    pub w_a: Option<f64>,
    pub w_b: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamTable {
    pub rows: Vec<StreamRow>,
}

impl StreamTable {
    pub fn get(&self, name: &str) -> Option<&StreamRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("stream,F_s [kg/h],F_g [kg/h],P [bar],T_s [degC],T_g [degC],w_A [%],w_B [%]\n");
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.6},{:.6},{},{},{},{},{}\n",
                r.name,
                r.f_s,
                r.f_g,
                opt(r.p),
                opt(r.t_s),
                opt(r.t_g),
                opt(r.w_a),
                opt(r.w_b)
            ));
        }
        s
    }
}

/// Plant-wide balance closures as relative errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Closure {
    /// Metakaolin-kaolinite moiety: feed against product plus dust.
    pub a_moiety: f64,
    /// Bound and free water: generated plus fed against purged.
    pub water: f64,
    /// ΣH_in + P_EHGG against ΣH_out, relative to P_EHGG.
    pub energy: f64,
    /// Absolute enthalpy imbalance [W].
    pub energy_abs: f64,
}

impl Closure {
    pub fn worst(&self) -> f64 {
        self.a_moiety.max(self.water).max(self.energy)
    }
}

/// Temperature at which `parts`, mixed adiabatically, have the same
/// phase enthalpy.
pub fn mixed_temperature(thermo: &Thermo, phase: Phase, parts: &[(MolarVector, f64)], p: f64) -> Option<f64> {
    let mut f = [0.0; NSPECIES];
    let mut h = 0.0;
    let mut guess = 0.0;
    let mut weight = 0.0;
    for (fk, t) in parts {
        let n: f64 = phase.members().iter().map(|i| fk[*i]).sum();
        if n <= 0.0 {
            continue;
        }
        for &i in phase.members() {
            f[i] += fk[i];
        }
        h += thermo.phase_enthalpy(phase, *t, p, fk);
        guess += n * t;
        weight += n;
    }
    if weight <= 0.0 {
        return None;
    }
    let mut t = guess / weight;
    for _ in 0..50 {
        let r = thermo.phase_enthalpy(phase, t, p, &f) - h;
        let cp: f64 = phase.members().iter().map(|i| f[*i] * thermo.cp(*i, t)).sum();
        let dt = r / cp;
        t -= dt;
        if dt.abs() < 1e-10 * t {
            break;
        }
    }
    Some(t)
}

fn kg_h(thermo: &Thermo, phase: Phase, f: &MolarVector) -> f64 {
    thermo.phase_mass(phase, f) * 3600.0
}

fn w_a(thermo: &Thermo, f: &MolarVector) -> Option<f64> {
    let m = thermo.molar_masses();
    let den = f[AB2] * m[AB2] + f[A] * m[A];
    (den > 0.0).then(|| 100.0 * f[A] * m[A] / den)
}

fn w_b(thermo: &Thermo, f: &MolarVector) -> Option<f64> {
    let mg = thermo.phase_mass(Phase::Gas, f);
    (mg > 0.0).then(|| 100.0 * f[B] * thermo.molar_masses()[B] / mg)
}

fn bar(p: f64) -> Option<f64> {
    Some(p / 1e5)
}

fn celsius(t: f64) -> f64 {
    t - 273.15
}

impl Plant {
    pub fn outputs(&self, z: &[f64]) -> PlantOutputs {
        let ev = self.evaluate(z);
        self.outputs_from(&ev)
    }

    pub fn outputs_from(&self, ev: &PlantEval<f64>) -> PlantOutputs {
        let th = &self.thermo;
        let m = th.molar_masses();
        let c = &ev.cyclones[2].c;
        let den = c[AB2] * m[AB2] + c[A] * m[A];
        PlantOutputs {
            cc: th.phase_mass(Phase::Solid, &ev.cyc_eval[2].f3).max(0.0),
            cd: if den > 0.0 { (c[A] * m[A] / den).clamp(0.0, 1.0) } else { 0.0 },
        }
    }

    /// Largest calciner interface speed [m/s].
    pub fn max_calciner_velocity(&self, z: &[f64]) -> f64 {
        self.evaluate(z).calciner.v.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn stream_table(&self, z: &[f64]) -> StreamTable {
        let ev = self.evaluate(z);
        let th = &self.thermo;
        let d = &self.disturbances;
        let [s1, s2, s3] = &ev.cyclones;
        let [e1, e2, e3] = &ev.cyc_eval;
        let row = |name, f: &MolarVector, p: Option<f64>, t_s: Option<f64>, t_g: Option<f64>| {
            let fs = kg_h(th, Phase::Solid, f);
            let fg = kg_h(th, Phase::Gas, f);
            StreamRow {
                name,
                f_s: fs,
                f_g: fg,
                p,
                t_s: if fs > 0.0 { t_s.map(celsius) } else { None },
                t_g: if fg > 0.0 { t_g.map(celsius) } else { None },
                w_a: w_a(th, f),
                w_b: w_b(th, f),
            }
        };
        let p = &ev.p;
        let last = ev.cells[ev.cells.len() - 1];
        let in2 = &ev.inlets[1].f_in;
        let in1 = &ev.inlets[0].f_in;
        let ts8 = mixed_temperature(th, Phase::Solid, &[(e3.f2, s3.t_s), (e1.f3, s1.t_s)], p[2]);
        let ts9 = mixed_temperature(th, Phase::Solid, &[(ev.f_clay, d.t_clay), (e2.f2, s2.t_s)], p[3]);
        let s5 = mix_flows(&ev.f_mix, &e2.f3);
        StreamTable {
            rows: vec![
                row("S1", &ev.f_filtered, bar(p[0]), None, Some(s1.t_g)),
                row("S2", &ev.f_purge, bar(p[0]), None, Some(s1.t_g)),
                row("S3", &ev.f_fresh, bar(p[0]), None, Some(d.t_fresh)),
                row("S4", &ev.f_mix, bar(p[0]), None, Some(ev.t_mix)),
                row("S5", &s5, bar(p[0]), Some(s2.t_s), Some(ev.t_gin)),
                row("S6", &ev.calciner_out, bar(p[1]), Some(last.t_s), Some(last.t_g)),
                row("S7", &e3.f3, bar(s3.p), Some(s3.t_s), None),
                row("S8", in2, bar(p[2]), ts8, Some(s3.t_g)),
                row("S9", in1, bar(p[3]), ts9, Some(s2.t_g)),
                row("S10", &e1.f2, bar(p[4]), Some(s1.t_s), Some(s1.t_g)),
            ],
        }
    }

    /// Plant-wide species and enthalpy closures, meaningful at steady state.
    pub fn closure(&self, z: &[f64]) -> Closure {
        let ev = self.evaluate(z);
        let th = &self.thermo;
        let d = &self.disturbances;
        let s1 = &ev.cyclones[0];
        let s3 = &ev.cyclones[2];
        let product = &ev.cyc_eval[2].f3;
        let dust = &ev.f_dust;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);

        let a_in = ev.f_clay[AB2] + ev.f_clay[A];
        let a_out = product[AB2] + product[A] + dust[AB2] + dust[A];
        let w_in = 2.0 * ev.f_clay[AB2] + ev.f_fresh[B];
        let w_out = 2.0 * (product[AB2] + dust[AB2]) + ev.f_purge[B];

        let h_in = th.mixture_enthalpy(d.t_clay, ev.p[3], &ev.f_clay)
            + th.mixture_enthalpy(d.t_fresh, ev.p[0], &ev.f_fresh)
            + self.inputs.p_ehgg;
        let h_out = th.mixture_enthalpy(s3.t_s, s3.p, product)
            + th.mixture_enthalpy(s1.t_s, ev.p[4], dust)
            + th.mixture_enthalpy(s1.t_g, ev.p[0], &ev.f_purge);
        let energy_abs = (h_in - h_out).abs();
        let scale = if self.inputs.p_ehgg > 0.0 { self.inputs.p_ehgg } else { h_in.abs().max(h_out.abs()) };
        Closure { a_moiety: rel(a_in, a_out), water: rel(w_in, w_out), energy: energy_abs / scale, energy_abs }
    }
}

fn mix_flows(a: &MolarVector, b: &MolarVector) -> MolarVector {
    std::array::from_fn(|i| a[i] + b[i])
}
