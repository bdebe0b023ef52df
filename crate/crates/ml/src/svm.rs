//! Soft-margin support vector machine with per-class slack costs.
//!
//! The dual problem solved is
//!
//! ```text
//! min  ½ αᵀQα − Σ αᵢ     s.t.  Σ yᵢαᵢ = 0,   0 ≤ αᵢ ≤ C·cost(yᵢ)
//! ```
//!
//! with `Qᵢⱼ = yᵢyⱼK(xᵢ, xⱼ)`. The solver is SMO with maximal-violating-pair
//! working-set selection; it stops once the KKT gap `m(α) − M(α)` falls to
//! `tol`.
//!
//! `cost_neg` scales the box of negative samples and therefore the price of
//! a false positive; `cost_pos` does the same for positives and false
//! negatives.

use std::collections::VecDeque;
use std::rc::Rc;

use crate::{check_labeled, dot, require_both_classes, MlError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: Kernel,
    /// Slack multiplier for positive samples (false-negative cost).
    pub cost_pos: f64,
    /// Slack multiplier for negative samples (false-positive cost).
    pub cost_neg: f64,
    /// Stopping tolerance on the KKT gap.
    pub tol: f64,
    /// Cap on pair updates.
    pub max_iter: usize,
    /// Kernel row cache budget in MiB.
    pub cache_mb: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            kernel: Kernel::Linear,
            cost_pos: 1.0,
            cost_neg: 1.0,
            tol: 1e-3,
            max_iter: 1_000_000,
            cache_mb: 256,
        }
    }
}

impl SvmParams {
    pub fn new(c: f64, kernel: Kernel) -> Self {
        Self { c, kernel, ..Self::default() }
    }

    /// Sets the (false-positive, false-negative) misclassification costs.
    pub fn with_costs(mut self, fp_cost: f64, fn_cost: f64) -> Self {
        self.cost_neg = fp_cost;
        self.cost_pos = fn_cost;
        self
    }

    fn validate(&self) -> Result<()> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !finite_pos(self.c) || !finite_pos(self.cost_pos) || !finite_pos(self.cost_neg) {
            return Err(MlError::InvalidParameter(format!(
                "C and class costs must be positive (C={}, cost_pos={}, cost_neg={})",
                self.c, self.cost_pos, self.cost_neg
            )));
        }
        if let Kernel::Rbf { gamma } = self.kernel {
            if !finite_pos(gamma) {
                return Err(MlError::InvalidParameter(format!("rbf gamma must be positive, got {gamma}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(MlError::InvalidParameter("tol must be positive".into()));
        }
        Ok(())
    }
}

/// A trained SVM: `f(x) = Σ coefᵢ·K(svᵢ, x) + bias` with `coefᵢ = yᵢαᵢ`.
#[derive(Debug, Clone)]
pub struct SvmModel {
    kernel: Kernel,
    dim: usize,
    support_vectors: Vec<f64>,
    coef: Vec<f64>,
    bias: f64,
    c: f64,
    cost_pos: f64,
    cost_neg: f64,
    linear_w: Option<Vec<f64>>,
}

impl SvmModel {
    /// Assembles a model from its stored parts. `support_vectors` is row-major
    /// with `dim` columns and one row per entry of `coef`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        kernel: Kernel,
        dim: usize,
        support_vectors: Vec<f64>,
        coef: Vec<f64>,
        bias: f64,
        c: f64,
        cost_pos: f64,
        cost_neg: f64,
    ) -> Result<Self> {
        if dim == 0 || support_vectors.len() != dim * coef.len() {
            return Err(MlError::Format(format!(
                "support vector block of {} values does not match {} vectors of dim {}",
                support_vectors.len(),
                coef.len(),
                dim
            )));
        }
        let linear_w = match kernel {
            Kernel::Linear => {
                let mut w = vec![0.0; dim];
                for (sv, &a) in support_vectors.chunks_exact(dim).zip(&coef) {
                    for (wk, &xk) in w.iter_mut().zip(sv) {
                        *wk += a * xk;
                    }
                }
                Some(w)
            }
            Kernel::Rbf { .. } => None,
        };
        Ok(Self { kernel, dim, support_vectors, coef, bias, c, cost_pos, cost_neg, linear_w })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_support(&self) -> usize {
        self.coef.len()
    }

    pub fn support_vector(&self, i: usize) -> &[f64] {
        &self.support_vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn support_vectors_flat(&self) -> &[f64] {
        &self.support_vectors
    }

    /// Signed dual weights `yᵢαᵢ`.
    pub fn coef(&self) -> &[f64] {
        &self.coef
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn cost_pos(&self) -> f64 {
        self.cost_pos
    }

    pub fn cost_neg(&self) -> f64 {
        self.cost_neg
    }

    /// Upper bound on `αᵢ` for a sample of the given label.
    pub fn box_bound(&self, label: i8) -> f64 {
        self.c * if label > 0 { self.cost_pos } else { self.cost_neg }
    }

    /// Primal weight vector, available for the linear kernel only.
    pub fn linear_weights(&self) -> Option<&[f64]> {
        self.linear_w.as_deref()
    }

    #[inline]
    pub fn decision(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        if let Some(w) = &self.linear_w {
            return dot(w, x) + self.bias;
        }
        let mut s = self.bias;
        for (sv, &a) in self.support_vectors.chunks_exact(self.dim).zip(&self.coef) {
            s += a * self.kernel.eval(sv, x);
        }
        s
    }

    /// `(label, score)` with label `+1` iff the score is strictly positive.
    pub fn predict(&self, x: &[f64]) -> (i8, f64) {
        let s = self.decision(x);
        (if s > 0.0 { 1 } else { -1 }, s)
    }
}

/// Result of a training run, including the full dual solution.
#[derive(Debug, Clone)]
pub struct SvmFit {
    pub model: SvmModel,
    /// Unsigned dual variables, one per training sample.
    pub alphas: Vec<f64>,
    /// Dual objective `½αᵀQα − Σα` at the solution.
    pub objective: f64,
    /// Final KKT gap `m(α) − M(α)`.
    pub kkt_gap: f64,
    pub iterations: usize,
}

struct QMatrix<'a> {
    x: &'a [Vec<f64>],
    y: &'a [i8],
    kernel: Kernel,
    rows: Vec<Option<Rc<[f64]>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> QMatrix<'a> {
    fn new(x: &'a [Vec<f64>], y: &'a [i8], kernel: Kernel, cache_mb: usize) -> Self {
        let n = x.len();
        let row_bytes = 8 * n.max(1);
        let capacity = ((cache_mb << 20) / row_bytes).max(2);
        Self { x, y, kernel, rows: vec![None; n], order: VecDeque::new(), capacity }
    }

    fn diag(&self, i: usize) -> f64 {
        self.kernel.eval(&self.x[i], &self.x[i])
    }

    fn row(&mut self, i: usize) -> Rc<[f64]> {
        if let Some(r) = &self.rows[i] {
            return Rc::clone(r);
        }
        let xi = &self.x[i];
        let yi = f64::from(self.y[i]);
        let row: Rc<[f64]> = self
            .x
            .iter()
            .zip(self.y)
            .map(|(xj, &yj)| yi * f64::from(yj) * self.kernel.eval(xi, xj))
            .collect();
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.rows[old] = None;
            }
        }
        self.order.push_back(i);
        self.rows[i] = Some(Rc::clone(&row));
        row
    }
}

const TAU: f64 = 1e-12;

/// Trains a cost-weighted SVM with SMO.
pub fn train(x: &[Vec<f64>], y: &[i8], params: &SvmParams) -> Result<SvmFit> {
    let dim = check_labeled(x, y)?;
    require_both_classes(y)?;
    params.validate()?;

    let n = x.len();
    let upper: Vec<f64> = y
        .iter()
        .map(|&l| params.c * if l > 0 { params.cost_pos } else { params.cost_neg })
        .collect();
    let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let mut q = QMatrix::new(x, y, params.kernel, params.cache_mb);
    let qd: Vec<f64> = (0..n).map(|i| q.diag(i)).collect();

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0usize;

    let kkt_gap = loop {
        // Maximal violating pair.
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        let mut i_sel = usize::MAX;
        let mut j_sel = usize::MAX;
        for t in 0..n {
            let v = -yf[t] * grad[t];
            let in_up = if y[t] > 0 { alpha[t] < upper[t] } else { alpha[t] > 0.0 };
            let in_low = if y[t] > 0 { alpha[t] > 0.0 } else { alpha[t] < upper[t] };
            if in_up && v > g_max {
                g_max = v;
                i_sel = t;
            }
            if in_low && v < g_min {
                g_min = v;
                j_sel = t;
            }
        }
        let gap = g_max - g_min;
        if i_sel == usize::MAX || j_sel == usize::MAX || gap <= params.tol {
            break gap.max(0.0);
        }
        if iterations >= params.max_iter {
            return Err(MlError::NoConvergence { iterations, gap });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let q_i = q.row(i);
        let q_j = q.row(j);
        let (c_i, c_j) = (upper[i], upper[j]);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);

        if y[i] != y[j] {
            let mut quad = qd[i] + qd[j] + 2.0 * q_i[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > c_i - c_j {
                if alpha[i] > c_i {
                    alpha[i] = c_i;
                    alpha[j] = c_i - diff;
                }
            } else if alpha[j] > c_j {
                alpha[j] = c_j;
                alpha[i] = c_j + diff;
            }
        } else {
            let mut quad = qd[i] + qd[j] - 2.0 * q_i[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c_i {
                if alpha[i] > c_i {
                    alpha[i] = c_i;
                    alpha[j] = sum - c_i;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c_j {
                if alpha[j] > c_j {
                    alpha[j] = c_j;
                    alpha[i] = sum - c_j;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let d_ai = alpha[i] - old_ai;
        let d_aj = alpha[j] - old_aj;
        for k in 0..n {
            grad[k] += q_i[k] * d_ai + q_j[k] * d_aj;
        }
    };

    let bias = -compute_rho(&alpha, &grad, y, &upper);
    let objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();

    let mut svs = Vec::new();
    let mut coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            svs.extend_from_slice(&x[t]);
            coef.push(yf[t] * alpha[t]);
        }
    }
    let model = SvmModel::from_parts(
        params.kernel,
        dim,
        svs,
        coef,
        bias,
        params.c,
        params.cost_pos,
        params.cost_neg,
    )?;
    log::debug!(
        "svm: n={n} iterations={iterations} n_sv={} gap={kkt_gap:.2e}",
        model.n_support()
    );
    Ok(SvmFit { model, alphas: alpha, objective, kkt_gap, iterations })
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[i8], upper: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = f64::from(y[t]) * grad[t];
        if alpha[t] >= upper[t] {
            if y[t] < 0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    if n_free > 0 {
        free_sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}
