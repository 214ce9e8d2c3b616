//! Kahler-Ricci flow integrators on U(n)-invariant profiles of CP^1 and CP^2.

mod error;
mod integrate;
mod potential;
mod reparam;
mod residuals;
mod singularity;
mod state;
mod step;

pub use error::{FlowError, Result};
pub use integrate::{integrate, integrate_to, RunOptions};
pub use potential::PotentialData;
pub use reparam::{to_krf, to_nkrf};
pub use residuals::{evolution_residuals, surface_law_residuals, time_derivative, EvolutionResiduals};
pub use singularity::{blowup_rescale, classify_type, homothety, Blowup, Pick, PickRule, TypeClass, TypeReport};
pub use state::{FlowKind, FlowState, Halt, IntegratorMeta, Representation, Scheme, StepDiagnostics, Trajectory};
pub use step::{
    class_coefficient, krf_step, nkrf_step, potential_flow_step, step_bound, StepBound, StepOptions,
    SINGULAR_CLASS_FLOOR, SINGULAR_CURVATURE_CEILING,
};
