use kahler_flow::FlowError;
use kahler_functionals::FunctionalError;
use kahler_kernel::KernelError;
use kahler_models::ModelError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimateError {
    #[error("scalar curvature {value:e} at t = {t}, node {node}: the Harnack quantities need R > 0")]
    NonPositiveScalar { t: f64, node: usize, value: f64 },
    #[error("trace inequality fails for {family} (m = {m}, sample {sample}): margin {margin:e}")]
    CounterexampleFound {
        family: String,
        m: usize,
        sample: usize,
        margin: f64,
        /// Row-major entries of the block matrix that fails.
        matrix: Vec<f64>,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub type Result<T> = std::result::Result<T, EstimateError>;
