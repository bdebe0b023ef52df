//! Stratified k-fold cross-validation and `(C, gamma)` grid search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::svm::{self, Kernel, SvmParams};
use crate::{check_labeled, MlError, Result};

/// Assigns every sample a fold id in `0..folds`, shuffling each class
/// independently so folds stay class-balanced.
pub fn stratified_folds(y: &[i8], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; y.len()];
    for class in [1i8, -1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            assignment[i] = k % folds;
        }
    }
    assignment
}

fn check_fold_support(y: &[i8], folds: usize) -> Result<()> {
    if folds < 2 {
        return Err(MlError::InvalidParameter(format!("need at least 2 folds, got {folds}")));
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    let neg = y.len() - pos;
    let least = pos.min(neg);
    if least < folds {
        return Err(MlError::InsufficientData { needed: folds, found: least });
    }
    Ok(())
}

/// Splits `(x, y)` into the training part and the held-out part of `fold`.
pub fn split_fold(
    x: &[Vec<f64>],
    y: &[i8],
    assignment: &[usize],
    fold: usize,
) -> (Vec<Vec<f64>>, Vec<i8>, Vec<Vec<f64>>, Vec<i8>) {
    let (mut xtr, mut ytr, mut xte, mut yte) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for ((xi, &yi), &f) in x.iter().zip(y).zip(assignment) {
        if f == fold {
            xte.push(xi.clone());
            yte.push(yi);
        } else {
            xtr.push(xi.clone());
            ytr.push(yi);
        }
    }
    (xtr, ytr, xte, yte)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvScore {
    /// Pooled held-out accuracy over all folds.
    pub accuracy: f64,
    /// Mean support-vector count of the fold models.
    pub mean_support: f64,
}

pub fn cross_validate_svm(
    x: &[Vec<f64>],
    y: &[i8],
    params: &SvmParams,
    folds: usize,
    seed: u64,
) -> Result<CvScore> {
    check_labeled(x, y)?;
    check_fold_support(y, folds)?;
    let assignment = stratified_folds(y, folds, seed);
    let per_fold: Vec<Result<(usize, usize)>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (xtr, ytr, xte, yte) = split_fold(x, y, &assignment, f);
            let fit = svm::train(&xtr, &ytr, params)?;
            let correct = xte
                .iter()
                .zip(&yte)
                .filter(|(xi, &yi)| fit.model.predict(xi).0 == yi)
                .count();
            Ok((correct, fit.model.n_support()))
        })
        .collect();
    let mut correct = 0;
    let mut support = 0;
    for r in per_fold {
        let (c, s) = r?;
        correct += c;
        support += s;
    }
    Ok(CvScore {
        accuracy: correct as f64 / x.len() as f64,
        mean_support: support as f64 / folds as f64,
    })
}

/// Log-spaced search grid over `C` and the RBF `gamma`.
#[derive(Debug, Clone)]
pub struct SvmGrid {
    pub c_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
}

impl SvmGrid {
    /// `n` log-spaced values per axis, spanning the given decades inclusive.
    pub fn log_spaced(n: usize, c_decades: (f64, f64), gamma_decades: (f64, f64)) -> Self {
        Self { c_values: log_space(c_decades, n), gamma_values: log_space(gamma_decades, n) }
    }
}

impl Default for SvmGrid {
    /// 7×7 grid with `C, gamma ∈ [10⁻¹, 10³]`.
    fn default() -> Self {
        Self::log_spaced(7, (-1.0, 3.0), (-1.0, 3.0))
    }
}

fn log_space((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![10f64.powf(lo)];
    }
    (0..n).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (n - 1) as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub c: f64,
    pub gamma: f64,
    pub score: CvScore,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub c: f64,
    pub gamma: f64,
    pub cv_accuracy: f64,
    pub table: Vec<GridPoint>,
}

/// Exhaustive CV over the grid with an RBF kernel. Among the points whose
/// accuracy lies within one standard error of the best (at least one
/// held-out sample), the one with the fewest support vectors wins; ties go
/// to the higher accuracy, then to grid order. `base` supplies the class
/// costs and solver settings.
pub fn hyperparam_search(
    x: &[Vec<f64>],
    y: &[i8],
    grid: &SvmGrid,
    folds: usize,
    seed: u64,
    base: &SvmParams,
) -> Result<SearchResult> {
    check_labeled(x, y)?;
    check_fold_support(y, folds)?;
    if grid.c_values.is_empty() || grid.gamma_values.is_empty() {
        return Err(MlError::InvalidParameter("empty search grid".into()));
    }
    let points: Vec<(f64, f64)> = grid
        .c_values
        .iter()
        .flat_map(|&c| grid.gamma_values.iter().map(move |&g| (c, g)))
        .collect();
    let scored: Vec<Result<GridPoint>> = points
        .par_iter()
        .map(|&(c, gamma)| {
            let params = SvmParams { c, kernel: Kernel::Rbf { gamma }, ..base.clone() };
            let score = cross_validate_svm(x, y, &params, folds, seed)?;
            log::debug!("grid C={c:.3e} gamma={gamma:.3e}: acc={:.4}", score.accuracy);
            Ok(GridPoint { c, gamma, score })
        })
        .collect();
    let table: Vec<GridPoint> = scored.into_iter().collect::<Result<_>>()?;

    // One-standard-error rule: the sparsest model whose accuracy is within one
    // binomial standard error of the best. The error is floored at a single
    // held-out sample so a lone misclassification never decides the choice.
    let n = x.len() as f64;
    let top = table.iter().map(|p| p.score.accuracy).fold(f64::NEG_INFINITY, f64::max);
    let se = (top * (1.0 - top) / n).sqrt().max(1.0 / n);
    let mut best: Option<GridPoint> = None;
    for p in table.iter().filter(|p| p.score.accuracy >= top - se - 1e-12) {
        let better = best.is_none_or(|b| {
            p.score.mean_support < b.score.mean_support
                || (p.score.mean_support == b.score.mean_support && p.score.accuracy > b.score.accuracy)
        });
        if better {
            best = Some(*p);
        }
    }
    let best = best.expect("the best grid point is always a candidate");
    Ok(SearchResult { c: best.c, gamma: best.gamma, cv_accuracy: best.score.accuracy, table })
}
