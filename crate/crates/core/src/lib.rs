pub mod calciner;
pub mod checks;
pub mod cyclone;
pub mod dae;
pub mod error;
pub mod kinetics;
pub mod plant;
pub mod scalar;
pub mod thermo;
pub mod units_aux;

pub use error::{Error, Result};
