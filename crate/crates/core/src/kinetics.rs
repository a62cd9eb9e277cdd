//! Dehydroxylation kinetics: AB2 -> A + 2 B.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::thermo::{MolarVector, NSPECIES, R_GAS};

/// Denominator guard for the conversion form [mol/m³].
pub const RATE_EPS: f64 = 1e-12;

/// Stoichiometric row in species order (AB2, A, B, air, Q).
pub const NU: MolarVector = [-1.0, 1.0, 2.0, 0.0, 0.0];

/// Moiety vectors conserved by the reaction.
pub const MOIETIES: [MolarVector; 2] = [[1.0, 1.0, 0.0, 0.0, 0.0], [2.0, 0.0, 1.0, 0.0, 0.0]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateForm {
    /// r = k c_AB2³
    LiteralCubic,
    /// r = k c_AB2³ / (c_AB2 + c_A)², i.e. dα/dt = k (1 − α)³
    #[default]
    ConversionCubic,
}

impl std::str::FromStr for RateForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal_cubic" => Ok(RateForm::LiteralCubic),
            "conversion_cubic" => Ok(RateForm::ConversionCubic),
            other => Err(Error::Config(format!("unknown rate form '{other}'"))),
        }
    }
}

impl std::fmt::Display for RateForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RateForm::LiteralCubic => "literal_cubic",
            RateForm::ConversionCubic => "conversion_cubic",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KineticParams {
    /// Activation energy [J/mol].
    pub e_a: f64,
    /// Pre-exponential factor [1/s].
    pub k0: f64,
    pub r_gas: f64,
    pub rate_form: RateForm,
}

impl Default for KineticParams {
    fn default() -> Self {
        KineticParams { e_a: 202e3, k0: 2.9e15, r_gas: R_GAS, rate_form: RateForm::ConversionCubic }
    }
}

impl KineticParams {
    pub fn new(e_a: f64, k0: f64, rate_form: RateForm) -> Result<Self> {
        let p = KineticParams { e_a, k0, r_gas: R_GAS, rate_form };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_a > 0.0 && self.k0 > 0.0 && self.r_gas > 0.0) {
            return Err(Error::Config(format!(
                "kinetic parameters must be positive (E_A = {}, k0 = {})",
                self.e_a, self.k0
            )));
        }
        for q in &MOIETIES {
            let s: f64 = (0..NSPECIES).map(|i| NU[i] * q[i]).sum();
            assert_eq!(s, 0.0, "stoichiometry does not conserve moieties");
        }
        Ok(())
    }

    /// k = k0 exp(−E_A / (R T_s)) [1/s].
    pub fn rate_constant<S: Scalar>(&self, t_s: S) -> S {
        (t_s.recip() * (-self.e_a / self.r_gas)).exp() * self.k0
    }

    /// Volumetric reaction rate r [mol/(m³ s)].
    pub fn reaction_rate<S: Scalar>(&self, c_ab2: S, c_a: S, t_s: S) -> S {
        let k = self.rate_constant(t_s);
        let cube = c_ab2 * c_ab2 * c_ab2;
        match self.rate_form {
            RateForm::LiteralCubic => k * cube,
            RateForm::ConversionCubic => {
                let tot = c_ab2 + c_a;
                let safe = S::select(tot.re() > RATE_EPS, tot, S::cst(1.0));
                S::select(tot.re() > RATE_EPS, k * cube / (safe * safe), S::zero())
            }
        }
    }

    /// R = νᵀ r.
    pub fn production_rate<S: Scalar>(&self, c: &MolarVector<S>, t_s: S) -> MolarVector<S> {
        let r = self.reaction_rate(c[0], c[1], t_s);
        NU.map(|nu| r * nu)
    }
}
