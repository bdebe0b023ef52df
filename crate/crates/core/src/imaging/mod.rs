//! Low-level image primitives shared by every pipeline stage.
//!
//! Window operations use replicate padding, except morphology, which only
//! considers structuring-element positions that fall inside the image.

mod edges;
mod filter;
mod morphology;
mod types;

pub use edges::{canny_edges, CannyThresholds};
pub use filter::{downsample_area, gaussian_kernel, gaussian_smooth, sobel_gradient, Gradient};
pub use morphology::{binary_erode, gray_closing, gray_dilate, gray_erode};
pub use types::{BinaryMask, GrayImage, LineAngle, RgbFrame, StructuringElement};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImagingError {
    #[error("image dimensions must be positive")]
    ZeroDimension,
    #[error("buffer holds {found} values, expected {expected}")]
    BufferSize { expected: usize, found: usize },
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("image {found:?} is smaller than the required {min}×{min}")]
    TooSmall { min: usize, found: (usize, usize) },
    #[error("pixel values must be finite")]
    NonFinite,
    #[error("channel value outside [0, 1]")]
    OutOfRange,
    #[error("structuring element has no offsets")]
    EmptyStructuringElement,
    #[error("structuring element repeats offset ({0}, {1})")]
    DuplicateOffset(isize, isize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Mean of the three channels, `(r + g + b) / 3`.
pub fn to_intensity(frame: &RgbFrame) -> GrayImage {
    let data = frame
        .red()
        .iter()
        .zip(frame.green())
        .zip(frame.blue())
        .map(|((r, g), b)| (r + g + b) / 3.0)
        .collect();
    GrayImage::from_parts_unchecked(frame.width(), frame.height(), data)
}

pub fn green_channel(frame: &RgbFrame) -> GrayImage {
    GrayImage::from_parts_unchecked(frame.width(), frame.height(), frame.green().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_pixel(r: f64, g: f64, b: f64) -> RgbFrame {
        RgbFrame::from_channels(1, 1, vec![r], vec![g], vec![b]).unwrap()
    }

    #[test]
    fn intensity_is_channel_mean() {
        assert_eq!(to_intensity(&one_pixel(0.0, 0.0, 0.0)).get(0, 0), 0.0);
        assert_eq!(to_intensity(&one_pixel(1.0, 1.0, 1.0)).get(0, 0), 1.0);
        assert!((to_intensity(&one_pixel(0.6, 0.3, 0.0)).get(0, 0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn green_is_a_projection() {
        assert_eq!(green_channel(&one_pixel(0.2, 0.7, 0.1)).get(0, 0), 0.7);
        let black = RgbFrame::from_rgb8(4, 4, &[0; 48]).unwrap();
        assert!(green_channel(&black).data().iter().all(|&v| v == 0.0));
    }
}
