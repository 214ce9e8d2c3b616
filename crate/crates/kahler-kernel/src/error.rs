use crate::tensor::IndexKind;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("metric left the Kahler cone at node {node}: smallest eigenvalue {min_eig:e} below floor {floor:e}")]
    NonPositive { node: usize, min_eig: f64, floor: f64 },
    #[error("differentiation backends disagree on {quantity}: {diff:e} > {tol:e} at node {node}")]
    BackendDisagreement {
        quantity: &'static str,
        diff: f64,
        tol: f64,
        node: usize,
    },
    #[error("unsupported tensor valence {0:?}")]
    UnsupportedValence(Vec<IndexKind>),
    #[error("complex dimension {0} is not supported (expected 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("field does not live on this grid: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, KernelError>;
