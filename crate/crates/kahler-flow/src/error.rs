use kahler_functionals::FunctionalError;
use kahler_kernel::KernelError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("step rejected at t = {t}: dt = {dt:e} exceeds the stability bound {bound:e}")]
    StepRejected { t: f64, dt: f64, bound: f64 },
    #[error("metric left the Kahler cone at t = {t} (node {node})")]
    NonPositive { t: f64, node: usize },
    #[error("singular time approached at s = {s}: class coefficient {class_coefficient:e}, curvature {curvature:e}")]
    SingularTimeApproached { s: f64, class_coefficient: f64, curvature: f64 },
    #[error("gauge solve failed: {0}")]
    GaugeSolveFailed(String),
    #[error("requested window {requested} exceeds the trajectory's {available}")]
    WindowExceeded { requested: f64, available: f64 },
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("no pick: curvature peaks at {max:e}, below the threshold {threshold:e}")]
    NoPick { threshold: f64, max: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Kernel(KernelError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

impl FlowError {
    pub(crate) fn at(t: f64, e: KernelError) -> Self {
        match e {
            KernelError::NonPositive { node, .. } => FlowError::NonPositive { t, node },
            other => FlowError::Kernel(other),
        }
    }
}

impl From<KernelError> for FlowError {
    fn from(e: KernelError) -> Self {
        FlowError::at(f64::NAN, e)
    }
}

pub type Result<T> = std::result::Result<T, FlowError>;
