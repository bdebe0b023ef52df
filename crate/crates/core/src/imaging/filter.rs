use super::{GrayImage, ImagingError};

/// Area-averaging downsampler: each output pixel is the mean of its source
/// box `[x·W/w, (x+1)·W/w) × [y·H/h, (y+1)·H/h)`.
pub fn downsample_area(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage, ImagingError> {
    if out_w == 0 || out_h == 0 {
        return Err(ImagingError::ZeroDimension);
    }
    let (w, h) = img.dims();
    if out_w > w || out_h > h {
        return Err(ImagingError::InvalidParameter(format!(
            "cannot downsample {w}×{h} to larger {out_w}×{out_h}"
        )));
    }
    let mut out = Vec::with_capacity(out_w * out_h);
    for oy in 0..out_h {
        let (y0, y1) = (oy * h / out_h, (oy + 1) * h / out_h);
        for ox in 0..out_w {
            let (x0, x1) = (ox * w / out_w, (ox + 1) * w / out_w);
            let mut sum = 0.0;
            for y in y0..y1 {
                sum += img.data()[y * w + x0..y * w + x1].iter().sum::<f64>();
            }
            out.push(sum / ((x1 - x0) * (y1 - y0)) as f64);
        }
    }
    Ok(GrayImage::from_parts_unchecked(out_w, out_h, out))
}

#[derive(Debug, Clone)]
pub struct Gradient {
    pub gx: GrayImage,
    pub gy: GrayImage,
    pub magnitude: GrayImage,
}

/// 3×3 Sobel derivatives with replicate padding. `gx` grows to the right,
/// `gy` grows downward.
pub fn sobel_gradient(img: &GrayImage) -> Result<Gradient, ImagingError> {
    let (w, h) = img.dims();
    if w < 3 || h < 3 {
        return Err(ImagingError::TooSmall { min: 3, found: (w, h) });
    }
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    let mut mag = vec![0.0; w * h];
    for y in 0..h {
        let ym = y.saturating_sub(1);
        let yp = (y + 1).min(h - 1);
        for x in 0..w {
            let xm = x.saturating_sub(1);
            let xp = (x + 1).min(w - 1);
            let p = |xx: usize, yy: usize| img.get(xx, yy);
            let dx = (p(xp, ym) + 2.0 * p(xp, y) + p(xp, yp)) - (p(xm, ym) + 2.0 * p(xm, y) + p(xm, yp));
            let dy = (p(xm, yp) + 2.0 * p(x, yp) + p(xp, yp)) - (p(xm, ym) + 2.0 * p(x, ym) + p(xp, ym));
            let i = y * w + x;
            gx[i] = dx;
            gy[i] = dy;
            mag[i] = (dx * dx + dy * dy).sqrt();
        }
    }
    Ok(Gradient {
        gx: GrayImage::from_parts_unchecked(w, h, gx),
        gy: GrayImage::from_parts_unchecked(w, h, gy),
        magnitude: GrayImage::from_parts_unchecked(w, h, mag),
    })
}

/// Normalized 1-D Gaussian taps for an odd `ksize`.
pub fn gaussian_kernel(sigma: f64, ksize: usize) -> Result<Vec<f64>, ImagingError> {
    if ksize.is_multiple_of(2) {
        return Err(ImagingError::InvalidParameter(format!("kernel size {ksize} must be odd")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(ImagingError::InvalidParameter(format!("sigma {sigma} must be positive")));
    }
    let r = (ksize / 2) as isize;
    let taps: Vec<f64> = (-r..=r).map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / sum).collect())
}

/// Separable Gaussian blur with replicate padding.
pub fn gaussian_smooth(img: &GrayImage, sigma: f64, ksize: usize) -> Result<GrayImage, ImagingError> {
    let k = gaussian_kernel(sigma, ksize)?;
    let r = (ksize / 2) as isize;
    let (w, h) = img.dims();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for (t, &kv) in k.iter().enumerate() {
                s += kv * img.get_clamped(x as isize + t as isize - r, y as isize);
            }
            tmp[y * w + x] = s;
        }
    }
    let tmp = GrayImage::from_parts_unchecked(w, h, tmp);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for (t, &kv) in k.iter().enumerate() {
                s += kv * tmp.get_clamped(x as isize, y as isize + t as isize - r);
            }
            out[y * w + x] = s;
        }
    }
    Ok(GrayImage::from_parts_unchecked(w, h, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn downsample_examples() {
        let c = GrayImage::new(720, 720, 0.5).unwrap();
        let d = downsample_area(&c, 180, 180).unwrap();
        assert!(d.data().iter().all(|&v| (v - 0.5).abs() < 1e-9));
        let two = GrayImage::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(downsample_area(&two, 1, 1).unwrap().get(0, 0), 0.5);
        assert!(matches!(downsample_area(&two, 0, 1), Err(ImagingError::ZeroDimension)));
        assert!(downsample_area(&two, 3, 1).is_err());
    }

    #[test]
    fn sobel_rejects_tiny_images() {
        let img = GrayImage::new(2, 5, 0.0).unwrap();
        assert!(matches!(sobel_gradient(&img), Err(ImagingError::TooSmall { .. })));
    }

    #[test]
    fn gaussian_rejects_even_kernels() {
        let img = GrayImage::new(5, 5, 0.0).unwrap();
        assert!(gaussian_smooth(&img, 1.0, 4).is_err());
        assert!(gaussian_smooth(&img, 0.0, 3).is_err());
    }

    #[test]
    fn impulse_response_is_the_kernel() {
        let mut img = GrayImage::new(31, 31, 0.0).unwrap();
        img.set(15, 15, 1.0);
        let out = gaussian_smooth(&img, 5.0, 21).unwrap();
        let k = gaussian_kernel(5.0, 21).unwrap();
        assert!((out.data().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((out.get(15, 15) - k[10] * k[10]).abs() < 1e-15);
        assert!((out.get(18, 13) - k[13] * k[8]).abs() < 1e-15);
    }
}
