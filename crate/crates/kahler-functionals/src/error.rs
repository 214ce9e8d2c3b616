use kahler_kernel::KernelError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FunctionalError {
    #[error("Poisson solve failed: {0}")]
    PoissonFailed(String),
    #[error("normalization of the Ricci potential failed: {0}")]
    NormalizationFailed(String),
    #[error("minimizer did not converge in {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence { iterations: usize, best_residual: f64 },
    #[error("vector field is not holomorphic (residual {residual:e})")]
    NotHolomorphic { residual: f64 },
    #[error("operation not available on this geometry: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub type Result<T> = std::result::Result<T, FunctionalError>;
