pub mod energy;
pub mod error;
pub mod field;
pub mod lab;
pub mod potential;
pub mod profile;
mod quad;
pub mod solver;
pub mod scalar;

pub use error::{Error, Result};
pub use potential::PotentialParams;
pub use scalar::Real;

/// Double-precision parameters, the configuration used by all experiments.
pub type Params = PotentialParams<f64>;
pub type Field = field::ScalarField<f64>;
pub type Indicator = field::IndicatorField<f64>;
pub type Grid2 = field::Grid<f64>;
pub type Options = solver::SolverOptions<f64>;
pub type Report = solver::SolveReport<f64>;
pub type Energy = energy::EnergyBreakdown<f64>;
