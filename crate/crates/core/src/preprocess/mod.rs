//! Stage 1: reduce a frame to the images and masks the frame classifier
//! needs.
//!
//! The frame is area-downsampled to 180×180. Three-class Otsu on the
//! intensity seeds a Chan–Vese segmentation that gives the foreground
//! `M_fore`. The green channel feeds two exposure features, a
//! directional-closing intensity `I_int` and a gradient entropy `I_en`, and
//! an SVM on those two marks overexposed foreground pixels `M_over`.

mod chan_vese;
mod exposure;
mod otsu;

pub use chan_vese::{chan_vese_energy, chan_vese_foreground, ChanVeseParams, ChanVeseResult};
pub use exposure::{
    entropy_feature, entropy_raw, intensity_feature, overexposure_mask, window_entropy, EntropyConfig,
};
pub use otsu::{bin_edge, bin_of, histogram, multi_otsu3, ExposureClass, OtsuPartition};

use afb_ml::svm::SvmModel;
use thiserror::Error;

use crate::config::Config;
use crate::imaging::{
    downsample_area, green_channel, sobel_gradient, to_intensity, BinaryMask, GrayImage, ImagingError,
    RgbFrame,
};
use crate::WORK_SIZE;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PreprocessError {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("intensity histogram has only {occupied_bins} occupied bins; three classes need at least 3")]
    DegenerateHistogram { occupied_bins: usize },
    #[error("active contour initialization is empty or covers the whole frame")]
    InitDegenerate,
    #[error("{0} model is missing")]
    ModelMissing(&'static str),
    #[error("model expects {found} features, stage provides {expected}")]
    ModelShape { expected: usize, found: usize },
    #[error("frame is {width}×{height}; stage 1 needs at least {min}×{min}", min = WORK_SIZE)]
    FrameTooSmall { width: usize, height: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Stage-1 images before the overexposure SVM runs.
#[derive(Debug, Clone)]
pub struct ExposureImages {
    /// Intensity `(r + g + b) / 3` at 180×180.
    pub i_i: GrayImage,
    /// Green channel at 180×180.
    pub i_g: GrayImage,
    /// Sobel gradient magnitude of `i_i`.
    pub grad_mag: GrayImage,
    pub m_fore: BinaryMask,
    pub i_int: GrayImage,
    pub i_en: GrayImage,
}

#[derive(Debug, Clone)]
pub struct PreprocessOutput {
    pub i_i: GrayImage,
    pub i_g: GrayImage,
    pub grad_mag: GrayImage,
    pub m_fore: BinaryMask,
    /// Always a subset of `m_fore`.
    pub m_over: BinaryMask,
    pub i_int: GrayImage,
    pub i_en: GrayImage,
}

/// Intensity and green channel at working resolution.
pub fn downsample_frame(frame: &RgbFrame) -> Result<(GrayImage, GrayImage), PreprocessError> {
    let (w, h) = frame.dims();
    if w < WORK_SIZE || h < WORK_SIZE {
        return Err(PreprocessError::FrameTooSmall { width: w, height: h });
    }
    let i_i = downsample_area(&to_intensity(frame), WORK_SIZE, WORK_SIZE)?;
    let i_g = downsample_area(&green_channel(frame), WORK_SIZE, WORK_SIZE)?;
    Ok((i_i, i_g))
}

/// Otsu-initialized Chan–Vese foreground, restricted to pixels at or above
/// the configured intensity floor. Frames entirely below the floor have an
/// empty foreground.
pub fn foreground_mask(i_i: &GrayImage, cfg: &Config) -> Result<BinaryMask, PreprocessError> {
    let (w, h) = i_i.dims();
    let floor = cfg.foreground.min_intensity;
    let (_, max) = i_i.min_max();
    if max < floor {
        return Ok(BinaryMask::empty(w, h)?);
    }
    let otsu = multi_otsu3(i_i, cfg.otsu.bins)?;
    let init_bits = otsu.labels().iter().map(|&l| l != ExposureClass::Background).collect();
    let init = BinaryMask::from_vec(w, h, init_bits)?;
    let cv = chan_vese_foreground(i_i, &init, &cfg.chanvese)?;
    let bright = BinaryMask::from_vec(w, h, i_i.data().iter().map(|&v| v >= floor).collect())?;
    Ok(cv.mask.intersection(&bright)?)
}

/// Everything stage 1 produces except the overexposure mask.
pub fn exposure_images(frame: &RgbFrame, cfg: &Config) -> Result<ExposureImages, PreprocessError> {
    let (i_i, i_g) = downsample_frame(frame)?;
    let m_fore = foreground_mask(&i_i, cfg)?;
    let grad_mag = sobel_gradient(&i_i)?.magnitude;
    let i_int = intensity_feature(&i_g);
    let i_en = entropy_feature(&i_g, &cfg.entropy)?;
    Ok(ExposureImages { i_i, i_g, grad_mag, m_fore, i_int, i_en })
}

pub fn run_preprocess(
    frame: &RgbFrame,
    overexposure_model: Option<&SvmModel>,
    cfg: &Config,
) -> Result<PreprocessOutput, PreprocessError> {
    let model = overexposure_model.ok_or(PreprocessError::ModelMissing("overexposure"))?;
    let ex = exposure_images(frame, cfg)?;
    let m_over = overexposure_mask(&ex.i_int, &ex.i_en, Some(model), &ex.m_fore)?;
    Ok(PreprocessOutput {
        i_i: ex.i_i,
        i_g: ex.i_g,
        grad_mag: ex.grad_mag,
        m_fore: ex.m_fore,
        m_over,
        i_int: ex.i_int,
        i_en: ex.i_en,
    })
}
