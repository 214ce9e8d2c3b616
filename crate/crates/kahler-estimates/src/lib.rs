//! Computable slacks and residuals for the inequalities and identities along the flow.

mod data;
mod error;
mod harnack;
mod heat;
mod noncollapse;
mod slack;
mod trace;
mod tracker;

pub use error::{EstimateError, Result};
pub use harnack::{harnack_pointwise, harnack_two_point, lyh_quadratic, lyh_value, seeded_pairs, HarnackPair, LyhSweep, HARNACK_TOL};
pub use heat::{heat_kernel_identity, heat_kernel_residual, HeatKernelReport};
pub use noncollapse::{ball_ratio, noncollapse, AdmissibleRatio, NoncollapseReport, RadiusPolicy};
pub use slack::{Hypothesis, SlackReport, Witness};
pub use trace::{block_margin, trace_inequality, TraceFamily, TraceReport, MARGIN_TOL};
pub use tracker::{perelman_tracker, BoundsReport, BoundsRow, FLOOR_TOL};
