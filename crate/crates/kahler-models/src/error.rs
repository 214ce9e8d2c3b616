use kahler_kernel::KernelError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("profile does not lie in the class {expected}: {detail}")]
    ClassMismatch { expected: String, detail: String },
    #[error("metric left the Kahler cone at node {node} (smallest eigenvalue {min_eig:e})")]
    NonPositive { node: usize, min_eig: f64 },
    #[error("metric is not symmetric about the requested center: {0}")]
    AsymmetryDetected(String),
    #[error(transparent)]
    Kernel(KernelError),
}

impl From<KernelError> for ModelError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::NonPositive { node, min_eig, .. } => ModelError::NonPositive { node, min_eig },
            other => ModelError::Kernel(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
