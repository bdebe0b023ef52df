//! Fisher's linear discriminant: `w = S_W⁻¹(μ₊ − μ₋)`, threshold at the
//! midpoint of the projected class means.

use nalgebra::{DMatrix, DVector};

use crate::{check_labeled, dot, require_both_classes, MlError, Result};

/// Ridge added to the within-class scatter when it is singular.
pub const SINGULAR_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FisherModel {
    w: Vec<f64>,
    b: f64,
}

impl FisherModel {
    pub fn from_parts(w: Vec<f64>, b: f64) -> Result<Self> {
        if w.is_empty() {
            return Err(MlError::Format("empty Fisher weight vector".into()));
        }
        Ok(Self { w, b })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn threshold(&self) -> f64 {
        self.b
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) - self.b
    }

    /// `+1` iff `w·x > b`.
    pub fn predict(&self, x: &[f64]) -> i8 {
        if dot(&self.w, x) > self.b {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone)]
pub struct FisherFit {
    pub model: FisherModel,
    /// True when the scatter matrix had to be regularized.
    pub regularized: bool,
}

pub fn train(x: &[Vec<f64>], y: &[i8]) -> Result<FisherFit> {
    let dim = check_labeled(x, y)?;
    require_both_classes(y)?;

    let mut mu_pos = DVector::<f64>::zeros(dim);
    let mut mu_neg = DVector::<f64>::zeros(dim);
    let (mut n_pos, mut n_neg) = (0usize, 0usize);
    for (xi, &yi) in x.iter().zip(y) {
        let v = DVector::from_column_slice(xi);
        if yi > 0 {
            mu_pos += v;
            n_pos += 1;
        } else {
            mu_neg += v;
            n_neg += 1;
        }
    }
    mu_pos /= n_pos as f64;
    mu_neg /= n_neg as f64;

    let mut scatter = DMatrix::<f64>::zeros(dim, dim);
    for (xi, &yi) in x.iter().zip(y) {
        let mu = if yi > 0 { &mu_pos } else { &mu_neg };
        let d = DVector::from_column_slice(xi) - mu;
        scatter += &d * d.transpose();
    }

    let diff = &mu_pos - &mu_neg;
    let (w, regularized) = match scatter.clone().cholesky() {
        Some(ch) if well_conditioned(&scatter) => (ch.solve(&diff), false),
        _ => {
            log::warn!("fisher: within-class scatter is singular, adding {SINGULAR_RIDGE:e}·I");
            let reg = scatter + DMatrix::identity(dim, dim) * SINGULAR_RIDGE;
            let w = reg
                .lu()
                .solve(&diff)
                .ok_or_else(|| MlError::InvalidParameter("regularized scatter not invertible".into()))?;
            (w, true)
        }
    };
    let w: Vec<f64> = w.iter().copied().collect();
    let b = 0.5 * (dot(&w, mu_pos.as_slice()) + dot(&w, mu_neg.as_slice()));
    Ok(FisherFit { model: FisherModel { w, b }, regularized })
}

fn well_conditioned(m: &DMatrix<f64>) -> bool {
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    max > 0.0 && min > max * 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_class_means_do_not_crash() {
        let x = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let y = vec![1, 1, -1, -1];
        let fit = train(&x, &y).unwrap();
        assert!(fit.model.weights().iter().all(|w| w.abs() < 1e-12));
    }

    #[test]
    fn collinear_data_takes_the_ridge_path() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![3.0, 3.0], vec![4.0, 4.0]];
        let y = vec![-1, -1, 1, 1];
        let fit = train(&x, &y).unwrap();
        assert!(fit.regularized);
        assert_eq!(fit.model.predict(&[4.0, 4.0]), 1);
        assert_eq!(fit.model.predict(&[0.0, 0.0]), -1);
    }
}
