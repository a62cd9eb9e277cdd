use crate::error::{Error, Result};
use crate::thermo::{MolarVector, Thermo, AB2, AIR, B, NSPECIES, Q};

/// Piecewise-constant signal as (start time [s], value) pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    steps: Vec<(f64, f64)>,
}

impl Schedule {
    pub fn constant(v: f64) -> Self {
        Schedule { steps: vec![(0.0, v)] }
    }

    pub fn new(steps: Vec<(f64, f64)>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Input("empty schedule".into()));
        }
        if steps[0].0 != 0.0 {
            return Err(Error::Input(format!("schedule must start at t = 0, starts at {}", steps[0].0)));
        }
        if steps.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Input("schedule times must be strictly increasing".into()));
        }
        if steps.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::Input("schedule contains a non-finite entry".into()));
        }
        Ok(Schedule { steps })
    }

    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }

    pub fn is_constant(&self) -> bool {
        self.steps.len() == 1
    }

    /// Value in force at `t`; a step applies from its start time on.
    pub fn at(&self, t: f64) -> f64 {
        let k = self.steps.partition_point(|(s, _)| *s <= t + 1e-12);
        self.steps[k.saturating_sub(1)].1
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().skip(1).map(|(t, _)| *t)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Schedule {
        Schedule { steps: self.steps.iter().map(|(t, v)| (*t, f(*v))).collect() }
    }

    fn check(&self, name: &str, ok: impl Fn(f64) -> bool) -> Result<()> {
        match self.steps.iter().find(|(_, v)| !ok(*v)) {
            Some((t, v)) => Err(Error::Input(format!("{name} = {v} at t = {t} s is out of range"))),
            None => Ok(()),
        }
    }
}

/// Manipulated variables at one instant, SI units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantInputs {
    /// Fresh clay feed [kg/s].
    pub clay_feed: f64,
    /// Kaolinite mass fraction of the clay, the rest is quartz.
    pub clay_kaolinite: f64,
    pub alpha_purge: f64,
    /// Fresh air feed [kg/s].
    pub fresh_air: f64,
    /// Water mass fraction of the fresh air.
    pub fresh_air_water: f64,
    /// Fan shaft power [W].
    pub p_fan: f64,
    /// Hot gas generator power [W].
    pub p_ehgg: f64,
}

impl Default for PlantInputs {
    fn default() -> Self {
        PlantInputs {
            clay_feed: 100.0 / 3600.0,
            clay_kaolinite: 0.68,
            alpha_purge: 0.3,
            fresh_air: 150.0 / 3600.0,
            fresh_air_water: 0.1,
            p_fan: 1.2e3,
            p_ehgg: 40e3,
        }
    }
}

impl PlantInputs {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [self.clay_feed, self.fresh_air, self.p_fan, self.p_ehgg];
        if nonneg.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Input("plant inputs must be non-negative".into()));
        }
        let fractions = [self.clay_kaolinite, self.alpha_purge, self.fresh_air_water];
        if fractions.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Input("fractions must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Clay molar flows [mol/s].
    pub fn clay_flows(&self, thermo: &Thermo) -> MolarVector {
        let m = thermo.molar_masses();
        let mut f = [0.0; NSPECIES];
        f[AB2] = self.clay_feed * self.clay_kaolinite / m[AB2];
        f[Q] = self.clay_feed * (1.0 - self.clay_kaolinite) / m[Q];
        f
    }

    /// Fresh air molar flows [mol/s].
    pub fn fresh_air_flows(&self, thermo: &Thermo) -> MolarVector {
        let m = thermo.molar_masses();
        let mut f = [0.0; NSPECIES];
        f[B] = self.fresh_air * self.fresh_air_water / m[B];
        f[AIR] = self.fresh_air * (1.0 - self.fresh_air_water) / m[AIR];
        f
    }
}

/// Time-varying inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct InputSchedule {
    pub clay_feed: Schedule,
    pub clay_kaolinite: f64,
    pub alpha_purge: Schedule,
    pub fresh_air: Schedule,
    pub fresh_air_water: f64,
    pub p_fan: Schedule,
    pub p_ehgg: Schedule,
}

impl InputSchedule {
    pub fn constant(u: &PlantInputs) -> Self {
        InputSchedule {
            clay_feed: Schedule::constant(u.clay_feed),
            clay_kaolinite: u.clay_kaolinite,
            alpha_purge: Schedule::constant(u.alpha_purge),
            fresh_air: Schedule::constant(u.fresh_air),
            fresh_air_water: u.fresh_air_water,
            p_fan: Schedule::constant(u.p_fan),
            p_ehgg: Schedule::constant(u.p_ehgg),
        }
    }

    /// The demonstration run: 100 kg/h of clay, doubled at 60 s.
    pub fn feed_step() -> Self {
        let mut s = InputSchedule::constant(&PlantInputs::default());
        s.clay_feed = Schedule { steps: vec![(0.0, 100.0 / 3600.0), (60.0, 200.0 / 3600.0)] };
        s
    }

    pub fn at(&self, t: f64) -> PlantInputs {
        PlantInputs {
            clay_feed: self.clay_feed.at(t),
            clay_kaolinite: self.clay_kaolinite,
            alpha_purge: self.alpha_purge.at(t),
            fresh_air: self.fresh_air.at(t),
            fresh_air_water: self.fresh_air_water,
            p_fan: self.p_fan.at(t),
            p_ehgg: self.p_ehgg.at(t),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = [&self.clay_feed, &self.alpha_purge, &self.fresh_air, &self.p_fan, &self.p_ehgg]
            .iter()
            .flat_map(|s| s.breakpoints())
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Scales the clay feed schedule, for parameter studies.
    pub fn with_clay_scaled(&self, k: f64) -> Self {
        InputSchedule { clay_feed: self.clay_feed.map(|v| v * k), ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.clay_feed.check("inputs.f_clay", |v| v >= 0.0)?;
        self.fresh_air.check("inputs.fresh_air", |v| v >= 0.0)?;
        self.p_fan.check("inputs.P_fan", |v| v >= 0.0)?;
        self.p_ehgg.check("inputs.P_EHGG", |v| v >= 0.0)?;
        self.alpha_purge.check("inputs.alpha_purge", |v| (0.0..=1.0).contains(&v))?;
        if !(0.0..=1.0).contains(&self.clay_kaolinite) || !(0.0..=1.0).contains(&self.fresh_air_water) {
            return Err(Error::Input("composition fractions must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Disturbances, held constant over a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disturbances {
    /// Median particle diameter [m].
    pub d_med: f64,
    /// Fresh air temperature [K].
    pub t_fresh: f64,
    /// Fresh clay temperature [K].
    pub t_clay: f64,
}

impl Default for Disturbances {
    fn default() -> Self {
        Disturbances { d_med: 7.61e-6, t_fresh: 303.15, t_clay: 303.15 }
    }
}

impl Disturbances {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_med > 0.0 && self.t_fresh > 0.0 && self.t_clay > 0.0) {
            return Err(Error::Input("disturbances must be positive".into()));
        }
        Ok(())
    }
}
