//! Stage 2 features: the informative mask, the sharpness map and the seven
//! frame-level features fed to the frame classifier.

use thiserror::Error;

use crate::config::Config;
use crate::imaging::{canny_edges, BinaryMask, GrayImage, ImagingError};
use crate::preprocess::PreprocessOutput;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("informative region is empty")]
    EmptyInformativeRegion,
    #[error("foreground is empty")]
    EmptyForeground,
}

/// Frame features, all computed over the informative pixels `M_inf`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVector7 {
    /// Mean gradient magnitude.
    pub alpha: f64,
    /// Population variance of the gradient magnitude.
    pub beta: f64,
    /// Fraction of informative pixels on a Canny edge.
    pub gamma: f64,
    /// Mean intensity (darkness).
    pub rho: f64,
    /// Mean sharpness.
    pub epsilon: f64,
    /// Population variance of the sharpness.
    pub zeta: f64,
    /// Overexposed share of the foreground, `|M_over| / |M_fore|`.
    pub eta: f64,
}

impl FeatureVector7 {
    pub const NAMES: [&'static str; 7] = ["alpha", "beta", "gamma", "rho", "epsilon", "zeta", "eta"];

    pub fn to_array(&self) -> [f64; 7] {
        [self.alpha, self.beta, self.gamma, self.rho, self.epsilon, self.zeta, self.eta]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        let [alpha, beta, gamma, rho, epsilon, zeta, eta] = a;
        Self { alpha, beta, gamma, rho, epsilon, zeta, eta }
    }
}

/// `M_inf = M_fore \ M_over`.
pub fn informative_mask(m_fore: &BinaryMask, m_over: &BinaryMask) -> Result<BinaryMask, FeatureError> {
    Ok(m_fore.difference(m_over)?)
}

/// Largest absolute difference between each pixel and its eight neighbours,
/// with replicate padding.
pub fn sharpness_map(i_i: &GrayImage) -> Result<GrayImage, FeatureError> {
    let (w, h) = i_i.dims();
    if w < 3 || h < 3 {
        return Err(ImagingError::TooSmall { min: 3, found: (w, h) }.into());
    }
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let c = i_i.get_clamped(x, y);
            let mut m = 0.0f64;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if dx != 0 || dy != 0 {
                        m = m.max((c - i_i.get_clamped(x + dx, y + dy)).abs());
                    }
                }
            }
            out.push(m);
        }
    }
    Ok(GrayImage::from_vec(w, h, out)?)
}

/// Mean and population variance over the selected pixels (two passes).
fn mean_var(values: &[f64], idx: &[usize]) -> (f64, f64) {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| values[i]).sum::<f64>() / n;
    let var = idx.iter().map(|&i| (values[i] - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

pub fn compute_frame_features(
    grad_mag: &GrayImage,
    i_i: &GrayImage,
    phi: &GrayImage,
    canny: &BinaryMask,
    m_inf: &BinaryMask,
    m_fore: &BinaryMask,
    m_over: &BinaryMask,
) -> Result<FeatureVector7, FeatureError> {
    let dims = m_inf.dims();
    for found in [grad_mag.dims(), i_i.dims(), phi.dims(), canny.dims(), m_fore.dims(), m_over.dims()] {
        if found != dims {
            return Err(ImagingError::DimensionMismatch { expected: dims, found }.into());
        }
    }
    let fore = m_fore.count();
    if fore == 0 {
        return Err(FeatureError::EmptyForeground);
    }
    let idx: Vec<usize> = m_inf.indices().collect();
    if idx.is_empty() {
        return Err(FeatureError::EmptyInformativeRegion);
    }
    let n = idx.len() as f64;
    let (alpha, beta) = mean_var(grad_mag.data(), &idx);
    let (rho, _) = mean_var(i_i.data(), &idx);
    let (epsilon, zeta) = mean_var(phi.data(), &idx);
    let edges = idx.iter().filter(|&&i| canny.bits()[i]).count();
    Ok(FeatureVector7 {
        alpha,
        beta,
        gamma: edges as f64 / n,
        rho,
        epsilon,
        zeta,
        eta: m_over.count() as f64 / fore as f64,
    })
}

/// Features of a preprocessed frame, along with its informative mask.
pub fn frame_features(
    pre: &PreprocessOutput,
    cfg: &Config,
) -> Result<(FeatureVector7, BinaryMask), FeatureError> {
    let m_inf = informative_mask(&pre.m_fore, &pre.m_over)?;
    let canny = canny_edges(&pre.i_i, cfg.canny.low, cfg.canny.high)?;
    let phi = sharpness_map(&pre.i_i)?;
    let f = compute_frame_features(&pre.grad_mag, &pre.i_i, &phi, &canny, &m_inf, &pre.m_fore, &pre.m_over)?;
    Ok((f, m_inf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn informative_mask_is_a_set_difference() {
        let fore = BinaryMask::from_fn(20, 10, |x, _| x < 10).unwrap();
        let over = BinaryMask::from_fn(20, 10, |x, _| x < 3).unwrap();
        assert_eq!(fore.count(), 100);
        assert_eq!(over.count(), 30);
        assert_eq!(informative_mask(&fore, &over).unwrap().count(), 70);
        assert_eq!(informative_mask(&fore, &BinaryMask::empty(20, 10).unwrap()).unwrap(), fore);
        assert!(informative_mask(&fore, &fore).unwrap().is_empty());
    }

    #[test]
    fn sharpness_of_isolated_pixel() {
        let mut img = GrayImage::new(7, 7, 0.0).unwrap();
        img.set(3, 3, 1.0);
        let phi = sharpness_map(&img).unwrap();
        for y in 0..7usize {
            for x in 0..7usize {
                let near = x.abs_diff(3) <= 1 && y.abs_diff(3) <= 1;
                assert_eq!(phi.get(x, y), if near { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn checkerboard_sharpness_is_one() {
        let img = GrayImage::from_fn(8, 8, |x, y| ((x + y) % 2) as f64).unwrap();
        let phi = sharpness_map(&img).unwrap();
        assert!(phi.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn constant_frame_features() {
        let c = GrayImage::new(9, 9, 0.42).unwrap();
        let zero = GrayImage::new(9, 9, 0.0).unwrap();
        let fore = BinaryMask::full(9, 9).unwrap();
        let none = BinaryMask::empty(9, 9).unwrap();
        let f = compute_frame_features(&zero, &c, &zero, &none, &fore, &fore, &none).unwrap();
        let expected = [0.0, 0.0, 0.0, 0.42, 0.0, 0.0, 0.0];
        assert!(f.to_array().iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12), "{f:?}");
    }

    #[test]
    fn full_overexposure_and_empty_regions() {
        let img = GrayImage::new(5, 5, 0.5).unwrap();
        let fore = BinaryMask::from_fn(5, 5, |x, _| x < 2).unwrap();
        let none = BinaryMask::empty(5, 5).unwrap();
        let m_inf = informative_mask(&fore, &fore).unwrap();
        let r = compute_frame_features(&img, &img, &img, &none, &m_inf, &fore, &fore);
        assert_eq!(r, Err(FeatureError::EmptyInformativeRegion));
        let r = compute_frame_features(&img, &img, &img, &none, &none, &none, &none);
        assert_eq!(r, Err(FeatureError::EmptyForeground));
        let part = BinaryMask::from_fn(5, 5, |x, y| x < 2 && y > 0).unwrap();
        let over = BinaryMask::from_fn(5, 5, |x, y| x < 2 && y == 0).unwrap();
        let f = compute_frame_features(&img, &img, &img, &none, &part, &fore, &over).unwrap();
        assert!((f.eta - 0.2).abs() < 1e-15);
    }
}
