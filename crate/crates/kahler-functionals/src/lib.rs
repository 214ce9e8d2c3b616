//! Variational quantities on radial profiles and periodic charts.

mod entropy;
mod error;
mod futaki;
pub mod geo;
mod monotonicity;
mod potential;
mod soliton;
mod w;

pub use entropy::{mu, mu_entropy, EntropyQuery, EntropyResult, InitPolicy, U_FLOOR};
pub use error::{FunctionalError, Result};
pub use futaki::{futaki, FutakiValue, HolomorphicField, HOLOMORPHY_TOL};
pub use monotonicity::{monotonicity_harness, strictness_indicator, MonotonicityPoint};
pub use potential::{a_coefficient, ricci_potential, solve_zero_mean, RicciPotential};
pub use soliton::{expanding_soliton_residual, soliton_residual, QuadraticPotential, SolitonResidual};
pub use w::{w_functional, w_functional_u, WValue, CONSTRAINT_TOL};
