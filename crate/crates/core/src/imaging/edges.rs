use std::collections::VecDeque;

use super::{sobel_gradient, BinaryMask, GrayImage, ImagingError};

/// Hysteresis thresholds as fractions of the image's largest gradient
/// magnitude.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CannyThresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for CannyThresholds {
    fn default() -> Self {
        Self { low: 0.10, high: 0.20 }
    }
}

/// Neighbour step along the gradient, quantized to 0°, 45°, 90° or 135°.
fn quantized_step(gx: f64, gy: f64) -> (isize, isize) {
    let mut deg = gy.atan2(gx).to_degrees();
    if deg < 0.0 {
        deg += 180.0;
    }
    if !(22.5..157.5).contains(&deg) {
        (1, 0)
    } else if deg < 67.5 {
        (1, 1)
    } else if deg < 112.5 {
        (0, 1)
    } else {
        (-1, 1)
    }
}

/// Sobel gradient, non-maximum suppression along the quantized gradient
/// direction, then hysteresis: weak responses survive only when 8-connected
/// to a strong one.
///
/// Suppression keeps a pixel whose magnitude is strictly above its backward
/// neighbour and at least its forward neighbour, so a plateau two pixels wide
/// yields a single-pixel line.
pub fn canny_edges(img: &GrayImage, low_frac: f64, high_frac: f64) -> Result<BinaryMask, ImagingError> {
    if !(low_frac > 0.0 && low_frac < high_frac && high_frac <= 1.0) {
        return Err(ImagingError::InvalidParameter(format!(
            "canny thresholds need 0 < low < high <= 1, got low={low_frac} high={high_frac}"
        )));
    }
    let grad = sobel_gradient(img)?;
    let (w, h) = img.dims();
    let mag = grad.magnitude.data();
    let max = mag.iter().fold(0.0f64, |a, &v| a.max(v));
    let mut out = BinaryMask::empty(w, h)?;
    if max <= 0.0 {
        return Ok(out);
    }
    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    let (low, high) = (low_frac * max, high_frac * max);
    // 0 = none, 1 = weak, 2 = strong
    let mut class = vec![0u8; w * h];
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m < low {
                continue;
            }
            let (dx, dy) = quantized_step(grad.gx.data()[i], grad.gy.data()[i]);
            let (xi, yi) = (x as isize, y as isize);
            if !(m > at(xi - dx, yi - dy) && m >= at(xi + dx, yi + dy)) {
                continue;
            }
            if m >= high {
                class[i] = 2;
                queue.push_back(i);
            } else {
                class[i] = 1;
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        out.bits_mut()[i] = true;
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if class[j] == 1 {
                    class[j] = 2;
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_no_edges() {
        let img = GrayImage::new(10, 10, 0.4).unwrap();
        assert!(canny_edges(&img, 0.1, 0.2).unwrap().is_empty());
    }

    #[test]
    fn thresholds_are_validated() {
        let img = GrayImage::new(10, 10, 0.4).unwrap();
        assert!(canny_edges(&img, 0.2, 0.1).is_err());
        assert!(canny_edges(&img, 0.0, 0.1).is_err());
        assert!(canny_edges(&img, 0.1, 1.5).is_err());
    }

    #[test]
    fn faint_edge_below_low_threshold_is_dropped() {
        // Strong step at x = 5, faint step (5% of it) at x = 15.
        let img = GrayImage::from_fn(24, 12, |x, _| {
            (if x >= 5 { 1.0 } else { 0.0 }) + if x >= 15 { 0.05 } else { 0.0 }
        })
        .unwrap();
        let edges = canny_edges(&img, 0.1, 0.2).unwrap();
        for y in 0..12 {
            for x in 10..24 {
                assert!(!edges.get(x, y), "faint edge kept at ({x},{y})");
            }
        }
        assert!(!edges.is_empty());
    }
}
