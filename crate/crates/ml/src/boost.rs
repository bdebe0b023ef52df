//! Discrete AdaBoost over small CART trees.
//!
//! Each weak learner is a weighted-Gini classification tree grown best-first
//! until it has `max_splits` internal nodes or no split lowers impurity. The
//! default of 11 trees × 20 splits bounds a model at 220 threshold tests.

use crate::{check_labeled, require_both_classes, MlError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf { label: i8 },
    /// Samples with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    /// Rebuilds a tree from its node table; node 0 is the root.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(MlError::Format("tree without nodes".into()));
        }
        for n in &nodes {
            if let Node::Split { left, right, .. } = *n {
                if left >= nodes.len() || right >= nodes.len() {
                    return Err(MlError::Format("tree child index out of range".into()));
                }
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }

    pub fn predict(&self, x: &[f64]) -> i8 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { label } => return label,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn gini_mass(w_pos: f64, w_neg: f64) -> f64 {
    let w = w_pos + w_neg;
    if w <= 0.0 {
        return 0.0;
    }
    w - (w_pos * w_pos + w_neg * w_neg) / w
}

fn majority(idx: &[usize], y: &[i8], w: &[f64]) -> i8 {
    let (mut p, mut n) = (0.0, 0.0);
    for &i in idx {
        if y[i] > 0 {
            p += w[i];
        } else {
            n += w[i];
        }
    }
    if p >= n {
        1
    } else {
        -1
    }
}

fn best_split(idx: &[usize], x: &[Vec<f64>], y: &[i8], w: &[f64]) -> Option<Candidate> {
    let (mut tot_p, mut tot_n) = (0.0, 0.0);
    for &i in idx {
        if y[i] > 0 {
            tot_p += w[i];
        } else {
            tot_n += w[i];
        }
    }
    let parent = gini_mass(tot_p, tot_n);
    if parent <= 0.0 {
        return None;
    }
    let dim = x[idx[0]].len();
    let mut best: Option<Candidate> = None;
    let mut order = idx.to_vec();
    for f in 0..dim {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let (mut lp, mut ln) = (0.0, 0.0);
        for k in 0..order.len() - 1 {
            let i = order[k];
            if y[i] > 0 {
                lp += w[i];
            } else {
                ln += w[i];
            }
            let (v, next) = (x[i][f], x[order[k + 1]][f]);
            if v == next {
                continue;
            }
            let gain = parent - gini_mass(lp, ln) - gini_mass(tot_p - lp, tot_n - ln);
            if gain > 1e-15 && best.is_none_or(|b| gain > b.gain) {
                best = Some(Candidate { gain, feature: f, threshold: 0.5 * (v + next) });
            }
        }
    }
    best
}

/// Grows one weighted tree best-first.
pub fn fit_tree(x: &[Vec<f64>], y: &[i8], w: &[f64], max_splits: usize) -> DecisionTree {
    let all: Vec<usize> = (0..x.len()).collect();
    let mut nodes = vec![Node::Leaf { label: majority(&all, y, w) }];
    // Open leaves: (node index, samples, best split).
    let mut open: Vec<(usize, Vec<usize>, Option<Candidate>)> = Vec::new();
    let root_split = best_split(&all, x, y, w);
    open.push((0, all, root_split));

    let mut splits = 0;
    while splits < max_splits {
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(k, (_, _, c))| c.map(|c| (k, c.gain)))
            .fold(None, |acc: Option<(usize, f64)>, (k, g)| match acc {
                Some((_, bg)) if bg >= g => acc,
                _ => Some((k, g)),
            });
        let Some((k, _)) = pick else { break };
        let (node, idx, cand) = open.swap_remove(k);
        let cand = cand.expect("picked leaves have a split");
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| x[i][cand.feature] <= cand.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { label: majority(&left_idx, y, w) });
        let right = nodes.len();
        nodes.push(Node::Leaf { label: majority(&right_idx, y, w) });
        nodes[node] = Node::Split { feature: cand.feature, threshold: cand.threshold, left, right };
        let ls = best_split(&left_idx, x, y, w);
        let rs = best_split(&right_idx, x, y, w);
        open.push((left, left_idx, ls));
        open.push((right, right_idx, rs));
        splits += 1;
    }
    DecisionTree { nodes }
}

#[derive(Debug, Clone, Copy)]
pub struct BoostParams {
    pub n_trees: usize,
    pub max_splits: usize,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self { n_trees: 11, max_splits: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedTrees {
    trees: Vec<DecisionTree>,
    weights: Vec<f64>,
}

impl BoostedTrees {
    pub fn from_parts(trees: Vec<DecisionTree>, weights: Vec<f64>) -> Result<Self> {
        if trees.len() != weights.len() {
            return Err(MlError::Format("tree/weight count mismatch".into()));
        }
        Ok(Self { trees, weights })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn tree_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total threshold tests across all trees.
    pub fn decision_operations(&self) -> usize {
        self.trees.iter().map(DecisionTree::n_splits).sum()
    }

    /// Weighted vote `Σ wₜ·hₜ(x)`.
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.trees.iter().zip(&self.weights).map(|(t, w)| w * f64::from(t.predict(x))).sum()
    }

    pub fn predict(&self, x: &[f64]) -> (i8, f64) {
        let m = self.margin(x);
        (if m >= 0.0 { 1 } else { -1 }, m)
    }
}

#[derive(Debug, Clone)]
pub struct BoostFit {
    pub model: BoostedTrees,
    /// Weighted training error of each accepted tree.
    pub weak_errors: Vec<f64>,
    /// Mean exponential loss `mean exp(−y·F(x))` after each accepted tree.
    pub exp_loss: Vec<f64>,
}

pub fn train(x: &[Vec<f64>], y: &[i8], params: &BoostParams) -> Result<BoostFit> {
    check_labeled(x, y)?;
    require_both_classes(y)?;
    if params.n_trees == 0 || params.max_splits == 0 {
        return Err(MlError::InvalidParameter("n_trees and max_splits must be positive".into()));
    }
    let n = x.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut score = vec![0.0; n];
    let mut trees = Vec::new();
    let mut weights = Vec::new();
    let mut weak_errors = Vec::new();
    let mut exp_loss = Vec::new();

    for round in 0..params.n_trees {
        let tree = fit_tree(x, y, &w, params.max_splits);
        let pred: Vec<i8> = x.iter().map(|xi| tree.predict(xi)).collect();
        let err: f64 = (0..n).filter(|&i| pred[i] != y[i]).map(|i| w[i]).sum();
        if err >= 0.5 {
            if trees.is_empty() {
                return Err(MlError::WeakLearnerFailed(err));
            }
            log::debug!("adaboost: round {round} weak error {err:.4} >= 0.5, stopping");
            break;
        }
        let e = err.max(1e-10);
        let alpha = 0.5 * ((1.0 - e) / e).ln();
        for i in 0..n {
            let m = f64::from(y[i]) * f64::from(pred[i]);
            score[i] += alpha * f64::from(pred[i]);
            w[i] *= (-alpha * m).exp();
        }
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= z);
        trees.push(tree);
        weights.push(alpha);
        weak_errors.push(err);
        exp_loss.push(
            score.iter().zip(y).map(|(s, &l)| (-f64::from(l) * s).exp()).sum::<f64>() / n as f64,
        );
        if err == 0.0 {
            break;
        }
    }
    Ok(BoostFit { model: BoostedTrees { trees, weights }, weak_errors, exp_loss })
}
