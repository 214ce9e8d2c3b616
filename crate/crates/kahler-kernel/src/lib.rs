//! Kahler geometry on sampled charts: metrics, curvature, covariant derivatives,
//! Laplacians and identity checks, each derivative available through two
//! independent differentiation schemes.

pub mod bisectional;
pub mod cheb;
pub mod covariant;
pub mod curvature;
pub mod error;
pub mod grid;
pub mod identities;
pub mod metric;
pub mod periodic;
pub mod radial;
pub mod tensor;

pub use bisectional::{min_bisectional, BisectionalMin};
pub use covariant::{covariant_derivative, laplacian, tensor_laplacian};
pub use curvature::{curvature, norms, CurvatureOptions, CurvaturePack, Frame, Norms};
pub use error::{KernelError, Result};
pub use grid::{ChartGrid, Closure, Topology};
pub use identities::{identity_residuals, IdentityOptions, IdentityReport};
pub use metric::{assemble_metric, HermitianMetricField, PeriodicMetric};
pub use periodic::{PeriodicDiff, PeriodicGrid, PeriodicScheme};
pub use radial::{RadialBackend, RadialGeometry, RadialGrid, RadialMetric};
pub use tensor::{IndexKind, ScalarField, TensorField};

pub use num_complex::Complex64 as C64;
