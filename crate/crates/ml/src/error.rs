use thiserror::Error;

pub type Result<T> = std::result::Result<T, MlError>;

#[derive(Debug, Error)]
pub enum MlError {
    #[error("no samples")]
    EmptyData,
    #[error("{samples} samples but {labels} labels")]
    LengthMismatch { samples: usize, labels: usize },
    #[error("row {row} has {found} features, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("label {0} is not +1 or -1")]
    InvalidLabel(i8),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("solver did not converge after {iterations} iterations (KKT gap {gap:.3e})")]
    NoConvergence { iterations: usize, gap: f64 },
    #[error("need at least {needed} samples per class, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("fewer than {k} distinct points")]
    DegenerateData { k: usize },
    #[error("first weak learner has weighted error {0:.4} >= 0.5")]
    WeakLearnerFailed(f64),
    #[error("model format: {0}")]
    Format(String),
}
