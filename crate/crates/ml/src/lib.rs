//! Classical classifiers used by the AFB video pipeline, written from scratch.
//!
//! - [`svm`]: soft-margin SVM with per-class slack costs, trained by SMO.
//! - [`cv`]: stratified k-fold cross-validation and a log-grid search over
//!   `(C, gamma)`.
//! - [`boost`]: discrete AdaBoost over small CART trees.
//! - [`mlp`]: a one-hidden-layer network with fixed input gains/offsets.
//! - [`fisher`]: Fisher's linear discriminant.
//! - [`kmeans`]: Lloyd's algorithm with k-means++ seeding.
//! - [`codec`]: the versioned binary model format shared by all of the above.
//!
//! Labels are `i8` values in `{-1, +1}` throughout. Samples are passed as
//! slices of rows.

pub mod boost;
pub mod codec;
pub mod cv;
mod error;
pub mod fisher;
pub mod kmeans;
pub mod mlp;
pub mod svm;

pub use error::{MlError, Result};

/// Checks that `x` and `y` line up, rows share a dimension and every label is
/// `+1` or `-1`. Returns the feature dimension.
pub(crate) fn check_labeled(x: &[Vec<f64>], y: &[i8]) -> Result<usize> {
    if x.is_empty() {
        return Err(MlError::EmptyData);
    }
    if x.len() != y.len() {
        return Err(MlError::LengthMismatch { samples: x.len(), labels: y.len() });
    }
    let dim = x[0].len();
    if dim == 0 {
        return Err(MlError::EmptyData);
    }
    for (i, row) in x.iter().enumerate() {
        if row.len() != dim {
            return Err(MlError::RaggedRow { row: i, expected: dim, found: row.len() });
        }
    }
    if let Some(&bad) = y.iter().find(|&&l| l != 1 && l != -1) {
        return Err(MlError::InvalidLabel(bad));
    }
    Ok(dim)
}

pub(crate) fn require_both_classes(y: &[i8]) -> Result<()> {
    let pos = y.contains(&1);
    let neg = y.contains(&-1);
    if pos && neg {
        Ok(())
    } else {
        Err(MlError::SingleClass)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}
