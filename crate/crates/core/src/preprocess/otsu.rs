//! Three-class Otsu thresholding by exhaustive search over bin pairs.

use crate::imaging::GrayImage;

use super::PreprocessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExposureClass {
    Background,
    Normal,
    Overexposed,
}

/// Two thresholds splitting an image into background, normal and
/// overexposed pixels: background iff `v < t1`, normal iff `t1 <= v < t2`,
/// overexposed iff `v >= t2`.
#[derive(Debug, Clone, PartialEq)]
pub struct OtsuPartition {
    pub t1: f64,
    pub t2: f64,
    /// Bin indices of the thresholds: `t_k = min + k·(max − min)/bins`.
    pub k1: usize,
    pub k2: usize,
    labels: Vec<ExposureClass>,
}

impl OtsuPartition {
    pub fn labels(&self) -> &[ExposureClass] {
        &self.labels
    }

    pub fn label(&self, v: f64) -> ExposureClass {
        if v < self.t1 {
            ExposureClass::Background
        } else if v < self.t2 {
            ExposureClass::Normal
        } else {
            ExposureClass::Overexposed
        }
    }
}

/// Threshold value at bin boundary `k`.
pub fn bin_edge(min: f64, max: f64, bins: usize, k: usize) -> f64 {
    min + k as f64 * (max - min) / bins as f64
}

/// Histogram bin of `v`, defined so that `bin(v) >= k` iff `v >= bin_edge(k)`.
pub fn bin_of(v: f64, min: f64, max: f64, bins: usize) -> usize {
    let guess = (((v - min) / (max - min)) * bins as f64).floor();
    let mut b = (guess.max(0.0) as usize).min(bins - 1);
    while b > 0 && v < bin_edge(min, max, bins, b) {
        b -= 1;
    }
    while b + 1 < bins && v >= bin_edge(min, max, bins, b + 1) {
        b += 1;
    }
    b
}

/// Histogram of `img` over `[min, max]` with `bins` bins.
pub fn histogram(img: &GrayImage, bins: usize) -> (Vec<u64>, f64, f64) {
    let (min, max) = img.min_max();
    let mut hist = vec![0u64; bins];
    if max > min {
        for &v in img.data() {
            hist[bin_of(v, min, max, bins)] += 1;
        }
    } else {
        hist[0] = img.data().len() as u64;
    }
    (hist, min, max)
}

/// Between-class score `Σ S_c² / n_c` as an exact fraction when it fits in
/// 128 bits. Maximizing it maximizes the between-class variance.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
    approx: f64,
}

impl Score {
    fn new(classes: [(u64, u64); 3]) -> Self {
        let approx = classes.iter().map(|&(n, s)| (s as f64) * (s as f64) / n as f64).sum();
        let [(n1, s1), (n2, s2), (n3, s3)] = classes.map(|(n, s)| (n as u128, s as u128));
        let exact = (|| {
            let den = n1.checked_mul(n2)?.checked_mul(n3)?;
            let a = s1.checked_mul(s1)?.checked_mul(n2)?.checked_mul(n3)?;
            let b = s2.checked_mul(s2)?.checked_mul(n1)?.checked_mul(n3)?;
            let c = s3.checked_mul(s3)?.checked_mul(n1)?.checked_mul(n2)?;
            Some((a.checked_add(b)?.checked_add(c)?, den))
        })();
        match exact {
            Some((num, den)) => Self { num, den, approx },
            None => Self { num: 0, den: 0, approx },
        }
    }

    fn greater_than(&self, other: &Score) -> bool {
        if self.den != 0 && other.den != 0 {
            if let (Some(l), Some(r)) =
                (self.num.checked_mul(other.den), other.num.checked_mul(self.den))
            {
                return l > r;
            }
        }
        self.approx > other.approx
    }
}

/// Exhaustive three-class Otsu. Every class must be nonempty; ties go to the
/// lexicographically smallest `(k1, k2)`.
pub fn multi_otsu3(img: &GrayImage, bins: usize) -> Result<OtsuPartition, PreprocessError> {
    if bins < 8 {
        return Err(PreprocessError::InvalidConfig(format!("otsu.bins must be >= 8, got {bins}")));
    }
    let (hist, min, max) = histogram(img, bins);
    let occupied = hist.iter().filter(|&&c| c > 0).count();
    if occupied < 3 {
        return Err(PreprocessError::DegenerateHistogram { occupied_bins: occupied });
    }
    // Prefix counts and index-weighted sums.
    let mut cum_n = vec![0u64; bins + 1];
    let mut cum_s = vec![0u64; bins + 1];
    for (i, &c) in hist.iter().enumerate() {
        cum_n[i + 1] = cum_n[i] + c;
        cum_s[i + 1] = cum_s[i] + c * i as u64;
    }
    let class = |lo: usize, hi: usize| (cum_n[hi] - cum_n[lo], cum_s[hi] - cum_s[lo]);

    let mut best: Option<(Score, usize, usize)> = None;
    for k1 in 1..bins - 1 {
        let c1 = class(0, k1);
        if c1.0 == 0 {
            continue;
        }
        for k2 in k1 + 1..bins {
            let (c2, c3) = (class(k1, k2), class(k2, bins));
            if c2.0 == 0 || c3.0 == 0 {
                continue;
            }
            let s = Score::new([c1, c2, c3]);
            if best.as_ref().is_none_or(|(b, _, _)| s.greater_than(b)) {
                best = Some((s, k1, k2));
            }
        }
    }
    let (_, k1, k2) = best.expect("three occupied bins admit a split");
    let t1 = bin_edge(min, max, bins, k1);
    let t2 = bin_edge(min, max, bins, k2);
    let mut part = OtsuPartition { t1, t2, k1, k2, labels: Vec::new() };
    part.labels = img.data().iter().map(|&v| part.label(v)).collect();
    Ok(part)
}
