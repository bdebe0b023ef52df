//! Per-pixel exposure features: the directional-closing intensity image, the
//! gradient-entropy image, and the SVM overexposure mask built on them.

use afb_ml::svm::SvmModel;

use crate::imaging::{
    gaussian_smooth, gray_closing, sobel_gradient, BinaryMask, GrayImage, ImagingError, LineAngle,
    StructuringElement,
};

use super::PreprocessError;

/// Four sequential updates `I ← I + [(I • B) − I]` with 1×3 line elements at
/// 0°, 45°, 90° and 135°. Each update equals a plain closing `I • B`, so the
/// result is the composition of the four directional closings and never
/// drops below the input.
pub fn intensity_feature(i_g: &GrayImage) -> GrayImage {
    let mut cur = i_g.clone();
    for angle in LineAngle::ALL {
        let closed = gray_closing(&cur, &StructuringElement::line(angle));
        let next: Vec<f64> = cur.data().iter().zip(closed.data()).map(|(&i, &c)| i + (c - i)).collect();
        cur = GrayImage::from_parts_unchecked(cur.width(), cur.height(), next);
    }
    cur
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyConfig {
    /// Odd side length of the square neighbourhood.
    pub window: usize,
    pub bins: usize,
    pub sigma: f64,
    pub ksize: usize,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self { window: 5, bins: 25, sigma: 5.0, ksize: 21 }
    }
}

/// `1 + Σ p·log₂p / log₂(m)` for one neighbourhood of gradient magnitudes,
/// where `m = min(bins, values.len())` is the largest reachable entropy.
///
/// Values are normalized by their maximum and binned uniformly over `[0, 1]`;
/// a neighbourhood without any gradient counts as a single-bin pdf.
pub fn window_entropy(values: &[f64], bins: usize) -> f64 {
    let max = values.iter().fold(0.0f64, |a, &v| a.max(v));
    let reach = bins.min(values.len());
    if max <= 0.0 || reach < 2 {
        return 1.0;
    }
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = ((v / max) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let n = values.len() as f64;
    let plogp: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum();
    (1.0 + plogp / (reach as f64).log2()).clamp(0.0, 1.0)
}

/// Gradient-entropy image before smoothing: high where the local gradient
/// distribution is concentrated (flat or saturated areas), low in texture.
pub fn entropy_raw(i_g: &GrayImage, cfg: &EntropyConfig) -> Result<GrayImage, PreprocessError> {
    if cfg.window == 0 || cfg.window.is_multiple_of(2) || cfg.bins < 2 {
        return Err(PreprocessError::InvalidConfig(format!(
            "entropy.window must be odd and entropy.bins >= 2, got {} and {}",
            cfg.window, cfg.bins
        )));
    }
    let mag = sobel_gradient(i_g)?.magnitude;
    let (w, h) = i_g.dims();
    let r = (cfg.window / 2) as isize;
    let mut window = Vec::with_capacity(cfg.window * cfg.window);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            window.clear();
            for dy in -r..=r {
                for dx in -r..=r {
                    window.push(mag.get_clamped(x + dx, y + dy));
                }
            }
            out.push(window_entropy(&window, cfg.bins));
        }
    }
    Ok(GrayImage::from_parts_unchecked(w, h, out))
}

pub fn entropy_feature(i_g: &GrayImage, cfg: &EntropyConfig) -> Result<GrayImage, PreprocessError> {
    let raw = entropy_raw(i_g, cfg)?;
    Ok(gaussian_smooth(&raw, cfg.sigma, cfg.ksize)?)
}

/// SVM decision on `(I_int, I_en)` for every foreground pixel; the result is
/// a subset of `m_fore` by construction.
pub fn overexposure_mask(
    i_int: &GrayImage,
    i_en: &GrayImage,
    model: Option<&SvmModel>,
    m_fore: &BinaryMask,
) -> Result<BinaryMask, PreprocessError> {
    let model = model.ok_or(PreprocessError::ModelMissing("overexposure"))?;
    if model.dim() != 2 {
        return Err(PreprocessError::ModelShape { expected: 2, found: model.dim() });
    }
    for found in [i_en.dims(), m_fore.dims()] {
        if found != i_int.dims() {
            return Err(ImagingError::DimensionMismatch { expected: i_int.dims(), found }.into());
        }
    }
    let (w, h) = i_int.dims();
    let mut out = BinaryMask::empty(w, h)?;
    let bits = out.bits_mut();
    for i in m_fore.indices() {
        let x = [i_int.data()[i], i_en.data()[i]];
        bits[i] = model.predict(&x).0 > 0;
    }
    Ok(out)
}
