//! Concrete geometries: Fubini–Study and U(n)-invariant metrics on CP^1 and CP^2,
//! seeded periodic test potentials, and ball/distance tables for symmetric metrics.

pub mod error;
pub mod geodesic;
pub mod periodic;
pub mod profile;

pub use error::{ModelError, Result};
pub use geodesic::{geodesic_table, Pole, SymmetricGeodesicTable};
pub use periodic::random_periodic_potential;
pub use profile::{bump_profile, fubini_study, radial_metric, ProfileRecord, RadialProfile};
