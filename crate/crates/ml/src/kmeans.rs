//! Lloyd's k-means with k-means++ seeding.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{MlError, Result};

#[derive(Debug, Clone)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub sse_history: Vec<f64>,
}

impl KMeans {
    pub fn sse(&self, x: &[Vec<f64>]) -> f64 {
        sse(x, &self.centroids, &self.assignments)
    }

    /// Cluster ids ordered by ascending value of centroid coordinate `axis`.
    pub fn rank_by(&self, axis: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.centroids.len()).collect();
        ids.sort_by(|&a, &b| self.centroids[a][axis].total_cmp(&self.centroids[b][axis]));
        ids
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

pub fn sse(x: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    x.iter().zip(assignments).map(|(xi, &a)| dist2(xi, &centroids[a])).sum()
}

fn nearest(xi: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, cen) in centroids.iter().enumerate() {
        let d = dist2(xi, cen);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

pub fn kmeans(x: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<KMeans> {
    if k == 0 {
        return Err(MlError::InvalidParameter("k must be positive".into()));
    }
    let mut distinct = HashSet::new();
    for xi in x {
        distinct.insert(xi.iter().map(|v| v.to_bits()).collect::<Vec<u64>>());
        if distinct.len() >= k {
            break;
        }
    }
    if distinct.len() < k {
        return Err(MlError::DegenerateData { k });
    }

    // k-means++ seeding.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = vec![x[rng.gen_range(0..x.len())].clone()];
    let mut d2: Vec<f64> = x.iter().map(|xi| dist2(xi, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut pick = x.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    pick = i;
                    break;
                }
                r -= d;
            }
            pick
        } else {
            rng.gen_range(0..x.len())
        };
        centroids.push(x[next].clone());
        for (d, xi) in d2.iter_mut().zip(x) {
            *d = d.min(dist2(xi, &centroids[centroids.len() - 1]));
        }
    }

    let dim = x[0].len();
    let mut assignments: Vec<usize> = x.iter().map(|xi| nearest(xi, &centroids)).collect();
    let mut sse_history = Vec::new();
    for _ in 0..max_iter {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (xi, &a) in x.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(xi) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        sse_history.push(sse(x, &centroids, &assignments));
        let next: Vec<usize> = x.iter().map(|xi| nearest(xi, &centroids)).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    Ok(KMeans { centroids, assignments, sse_history })
}
