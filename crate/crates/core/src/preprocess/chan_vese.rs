//! Two-phase piecewise-constant segmentation (Chan–Vese energy) minimized by
//! sequential pixel flips.
//!
//! The energy of a labelling is
//!
//! ```text
//! E = [Σ_in (v − c_in)² + Σ_out (v − c_out)²] / var(img) + μ · L
//! ```
//!
//! where `c_in`, `c_out` are the region means and `L` counts 4-neighbour
//! pairs with different labels (a discrete contour length). Each sweep
//! visits pixels in raster order and flips a pixel when the exact energy
//! change, including the shift of both means, is negative. Every accepted
//! flip lowers `E`, so the energy is non-increasing across sweeps.

use crate::imaging::{BinaryMask, GrayImage, ImagingError};

use super::PreprocessError;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChanVeseParams {
    /// Contour length weight, relative to a unit-variance data term.
    pub mu: f64,
    pub max_iters: usize,
    /// Stop once a sweep changes fewer than `tol · pixels` labels.
    pub tol: f64,
}

impl Default for ChanVeseParams {
    fn default() -> Self {
        Self { mu: 0.2, max_iters: 200, tol: 0.001 }
    }
}

#[derive(Debug, Clone)]
pub struct ChanVeseResult {
    pub mask: BinaryMask,
    pub iterations: usize,
    /// Energy of the initial labelling followed by the energy after each sweep.
    pub energy: Vec<f64>,
}

/// Energy of `mask` on `img`, computed directly from the definition.
pub fn chan_vese_energy(img: &GrayImage, mask: &BinaryMask, mu: f64) -> f64 {
    let (w, h) = img.dims();
    let var = data_variance(img);
    let mut sums = [(0usize, 0.0f64); 2];
    for (&v, &m) in img.data().iter().zip(mask.bits()) {
        let s = &mut sums[m as usize];
        s.0 += 1;
        s.1 += v;
    }
    let means = sums.map(|(n, s)| if n > 0 { s / n as f64 } else { 0.0 });
    let sse: f64 = img
        .data()
        .iter()
        .zip(mask.bits())
        .map(|(&v, &m)| (v - means[m as usize]).powi(2))
        .sum();
    let mut length = 0usize;
    for y in 0..h {
        for x in 0..w {
            let m = mask.get(x, y);
            if x + 1 < w && mask.get(x + 1, y) != m {
                length += 1;
            }
            if y + 1 < h && mask.get(x, y + 1) != m {
                length += 1;
            }
        }
    }
    sse / var + mu * length as f64
}

/// Variance of the pixel values, floored so constant images stay finite.
fn data_variance(img: &GrayImage) -> f64 {
    let n = img.data().len() as f64;
    let mean = img.mean();
    let var = img.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.max(1e-12)
}

pub fn chan_vese_foreground(
    img: &GrayImage,
    init: &BinaryMask,
    params: &ChanVeseParams,
) -> Result<ChanVeseResult, PreprocessError> {
    if init.dims() != img.dims() {
        return Err(ImagingError::DimensionMismatch { expected: img.dims(), found: init.dims() }.into());
    }
    let total = img.data().len();
    let inside = init.count();
    if inside == 0 || inside == total {
        return Err(PreprocessError::InitDegenerate);
    }
    if !(params.mu >= 0.0) || !(params.tol >= 0.0) {
        return Err(PreprocessError::InvalidConfig("chanvese.mu and chanvese.tol must be >= 0".into()));
    }
    let (w, h) = img.dims();
    let data = img.data();
    let inv_var = 1.0 / data_variance(img);
    let mut labels: Vec<bool> = init.bits().to_vec();
    let mut energy = vec![chan_vese_energy(img, init, params.mu)];
    let mut iterations = 0;

    while iterations < params.max_iters {
        iterations += 1;
        // Fresh sums each sweep keep the running means from drifting.
        let mut n = [0usize; 2];
        let mut s = [0.0f64; 2];
        for (&v, &l) in data.iter().zip(&labels) {
            n[l as usize] += 1;
            s[l as usize] += v;
        }
        let mut changes = 0usize;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let from = labels[i] as usize;
                let to = 1 - from;
                if n[from] <= 1 {
                    continue;
                }
                let v = data[i];
                let (na, nb) = (n[from] as f64, n[to] as f64);
                let (ma, mb) = (s[from] / na, s[to] / nb);
                let d_sse = -na / (na - 1.0) * (v - ma).powi(2) + nb / (nb + 1.0) * (v - mb).powi(2);
                let mut same = 0i64;
                let mut diff = 0i64;
                let mut visit = |j: usize| {
                    if labels[j] == labels[i] {
                        same += 1;
                    } else {
                        diff += 1;
                    }
                };
                if x > 0 {
                    visit(i - 1);
                }
                if x + 1 < w {
                    visit(i + 1);
                }
                if y > 0 {
                    visit(i - w);
                }
                if y + 1 < h {
                    visit(i + w);
                }
                let d_energy = d_sse * inv_var + params.mu * (same - diff) as f64;
                if d_energy < 0.0 {
                    labels[i] = !labels[i];
                    n[from] -= 1;
                    n[to] += 1;
                    s[from] -= v;
                    s[to] += v;
                    changes += 1;
                }
            }
        }
        let mask = BinaryMask::from_vec(w, h, labels.clone())?;
        energy.push(chan_vese_energy(img, &mask, params.mu));
        if (changes as f64) < params.tol * total as f64 || changes == 0 {
            break;
        }
    }
    let mask = BinaryMask::from_vec(w, h, labels)?;
    Ok(ChanVeseResult { mask, iterations, energy })
}
