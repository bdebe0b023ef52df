//! Two-layer network: fixed input scaling, one tanh hidden layer, sigmoid
//! output, trained on binary cross-entropy.
//!
//! Inputs are scaled as `x' = gain ∘ (x + offset)` before the first layer.
//! The gains and offsets are constants of the model, not trained.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{check_labeled, require_both_classes, MlError, Result};

/// Default input gains for the seven frame features (α, β, γ, ρ, ε, ζ, η).
pub const DEFAULT_INPUT_GAIN: [f64; 7] = [2.74, 9.11, 2.13, 5.21, 4.73, 0.07, 1.93];
/// Default input offsets for the seven frame features.
pub const DEFAULT_INPUT_OFFSET: [f64; 7] = [0.03, 0.0, 0.06, 0.19, 0.007, 0.0, 0.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ShallowNet {
    dim: usize,
    hidden: usize,
    gain: Vec<f64>,
    offset: Vec<f64>,
    /// `hidden × dim`, row-major.
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + eᶻ)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl ShallowNet {
    /// Randomly initialized network (Glorot-uniform weights, zero biases).
    pub fn new(gain: Vec<f64>, offset: Vec<f64>, hidden: usize, seed: u64) -> Result<Self> {
        let dim = gain.len();
        if dim == 0 || offset.len() != dim || hidden == 0 {
            return Err(MlError::InvalidParameter(format!(
                "bad network shape: {} gains, {} offsets, {hidden} hidden",
                gain.len(),
                offset.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l1 = (6.0 / (dim + hidden) as f64).sqrt();
        let l2 = (6.0 / (hidden + 1) as f64).sqrt();
        let w1 = (0..hidden * dim).map(|_| rng.gen_range(-l1..l1)).collect();
        let w2 = (0..hidden).map(|_| rng.gen_range(-l2..l2)).collect();
        Ok(Self { dim, hidden, gain, offset, w1, b1: vec![0.0; hidden], w2, b2: 0.0 })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        gain: Vec<f64>,
        offset: Vec<f64>,
        hidden: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: f64,
    ) -> Result<Self> {
        let dim = gain.len();
        if offset.len() != dim || w1.len() != hidden * dim || b1.len() != hidden || w2.len() != hidden {
            return Err(MlError::Format("inconsistent network layer sizes".into()));
        }
        Ok(Self { dim, hidden, gain, offset, w1, b1, w2, b2 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn gain(&self) -> &[f64] {
        &self.gain
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Trainable parameters in the order `w1, b1, w2, b2`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_parameters());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn n_parameters(&self) -> usize {
        self.hidden * self.dim + 2 * self.hidden + 1
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_parameters());
        let (h, d) = (self.hidden, self.dim);
        self.w1.copy_from_slice(&p[..h * d]);
        self.b1.copy_from_slice(&p[h * d..h * d + h]);
        self.w2.copy_from_slice(&p[h * d + h..h * d + 2 * h]);
        self.b2 = p[h * d + 2 * h];
    }

    fn scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.gain).zip(&self.offset).map(|((v, g), o)| g * (v + o)).collect()
    }

    fn hidden_activations(&self, xs: &[f64], out: &mut [f64]) {
        for (k, a) in out.iter_mut().enumerate() {
            let row = &self.w1[k * self.dim..(k + 1) * self.dim];
            let z: f64 = self.b1[k] + row.iter().zip(xs).map(|(w, v)| w * v).sum::<f64>();
            *a = z.tanh();
        }
    }

    fn logit(&self, x: &[f64]) -> f64 {
        let xs = self.scaled(x);
        let mut h = vec![0.0; self.hidden];
        self.hidden_activations(&xs, &mut h);
        self.b2 + h.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>()
    }

    /// Probability of the positive class.
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// `(label, probability)` with label `+1` iff probability ≥ ½.
    pub fn predict(&self, x: &[f64]) -> (i8, f64) {
        let p = self.probability(x);
        (if p >= 0.5 { 1 } else { -1 }, p)
    }

    /// Mean binary cross-entropy over `(x, y)`.
    pub fn loss(&self, x: &[Vec<f64>], y: &[i8]) -> f64 {
        let total: f64 = x
            .iter()
            .zip(y)
            .map(|(xi, &yi)| {
                let z = self.logit(xi);
                softplus(z) - if yi > 0 { z } else { 0.0 }
            })
            .sum();
        total / x.len() as f64
    }

    /// Mean cross-entropy and its gradient, laid out like [`parameters`].
    ///
    /// [`parameters`]: ShallowNet::parameters
    pub fn loss_and_grad(&self, x: &[Vec<f64>], y: &[i8]) -> (f64, Vec<f64>) {
        let (h, d) = (self.hidden, self.dim);
        let mut grad = vec![0.0; self.n_parameters()];
        let mut act = vec![0.0; h];
        let mut loss = 0.0;
        let inv_n = 1.0 / x.len() as f64;
        for (xi, &yi) in x.iter().zip(y) {
            let xs = self.scaled(xi);
            self.hidden_activations(&xs, &mut act);
            let z = self.b2 + act.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>();
            let t = if yi > 0 { 1.0 } else { 0.0 };
            loss += softplus(z) - t * z;
            let dz = (sigmoid(z) - t) * inv_n;
            grad[h * d + 2 * h] += dz;
            for k in 0..h {
                grad[h * d + h + k] += dz * act[k];
                let da = dz * self.w2[k] * (1.0 - act[k] * act[k]);
                grad[h * d + k] += da;
                let row = &mut grad[k * d..(k + 1) * d];
                for (g, v) in row.iter_mut().zip(&xs) {
                    *g += da * v;
                }
            }
        }
        (loss * inv_n, grad)
    }
}

#[derive(Debug, Clone)]
pub struct MlpParams {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Fraction of samples held out for early stopping.
    pub val_frac: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub gain: Vec<f64>,
    pub offset: Vec<f64>,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: 220,
            epochs: 3000,
            learning_rate: 0.01,
            val_frac: 0.2,
            patience: 200,
            seed: 0,
            gain: DEFAULT_INPUT_GAIN.to_vec(),
            offset: DEFAULT_INPUT_OFFSET.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MlpFit {
    /// Weights at the best validation loss.
    pub model: ShallowNet,
    /// False when the epoch budget ran out before early stopping triggered.
    pub converged: bool,
    pub epochs_run: usize,
    pub best_val_loss: f64,
}

/// Full-batch Adam on cross-entropy with validation early stopping.
pub fn train(x: &[Vec<f64>], y: &[i8], params: &MlpParams) -> Result<MlpFit> {
    let dim = check_labeled(x, y)?;
    require_both_classes(y)?;
    if dim != params.gain.len() {
        return Err(MlError::InvalidParameter(format!(
            "{} input gains for {dim}-dimensional samples",
            params.gain.len()
        )));
    }
    if !(0.0..1.0).contains(&params.val_frac) {
        return Err(MlError::InvalidParameter("val_frac must be in [0, 1)".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((x.len() as f64) * params.val_frac).round() as usize;
    let n_val = n_val.min(x.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let pick = |ids: &[usize]| -> (Vec<Vec<f64>>, Vec<i8>) {
        (ids.iter().map(|&i| x[i].clone()).collect(), ids.iter().map(|&i| y[i]).collect())
    };
    let (xtr, ytr) = pick(train_idx);
    let (xva, yva) = if val_idx.is_empty() { pick(train_idx) } else { pick(val_idx) };

    let mut net = ShallowNet::new(params.gain.clone(), params.offset.clone(), params.hidden, rng.gen())?;
    let mut theta = net.parameters();
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);

    let mut best = net.clone();
    let mut best_val = net.loss(&xva, &yva);
    let mut since_best = 0;
    let mut converged = false;
    let mut epochs_run = 0;
    for epoch in 1..=params.epochs {
        epochs_run = epoch;
        let (_, g) = net.loss_and_grad(&xtr, &ytr);
        let (c1, c2) = (1.0 - b1.powi(epoch as i32), 1.0 - b2.powi(epoch as i32));
        for k in 0..theta.len() {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            theta[k] -= params.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
        }
        net.set_parameters(&theta);
        let val = net.loss(&xva, &yva);
        if val < best_val {
            best_val = val;
            best = net.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= params.patience {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        log::warn!(
            "mlp: no early stop within {} epochs; keeping best weights (val loss {best_val:.4})",
            params.epochs
        );
    }
    Ok(MlpFit { model: best, converged, epochs_run, best_val_loss: best_val })
}
