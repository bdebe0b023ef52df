use super::{BinaryMask, GrayImage, StructuringElement};

// Grey-level morphology only visits structuring-element positions inside the
// image. With this convention dilation and erosion form an adjunction on the
// bounded grid, so closing stays extensive and idempotent at the borders.

/// `δ(f)(p) = max { f(p − b) : b ∈ B, p − b inside }`.
pub fn gray_dilate(img: &GrayImage, se: &StructuringElement) -> GrayImage {
    extremum(img, se, -1, f64::max, f64::NEG_INFINITY)
}

/// `ε(f)(p) = min { f(p + b) : b ∈ B, p + b inside }`.
pub fn gray_erode(img: &GrayImage, se: &StructuringElement) -> GrayImage {
    extremum(img, se, 1, f64::min, f64::INFINITY)
}

/// Erosion of the dilation.
pub fn gray_closing(img: &GrayImage, se: &StructuringElement) -> GrayImage {
    gray_erode(&gray_dilate(img, se), se)
}

fn extremum(
    img: &GrayImage,
    se: &StructuringElement,
    sign: isize,
    pick: fn(f64, f64) -> f64,
    init: f64,
) -> GrayImage {
    let (w, h) = img.dims();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = init;
            for &(dx, dy) in se.offsets() {
                let sx = x as isize + sign * dx;
                let sy = y as isize + sign * dy;
                if sx >= 0 && sy >= 0 && (sx as usize) < w && (sy as usize) < h {
                    acc = pick(acc, img.get(sx as usize, sy as usize));
                }
            }
            // Only reachable for elements that exclude the origin.
            out[y * w + x] = if acc.is_finite() { acc } else { img.get(x, y) };
        }
    }
    GrayImage::from_parts_unchecked(w, h, out)
}

/// Keeps a pixel iff every translate `p + b` lies in the mask; off-grid
/// positions count as outside.
pub fn binary_erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (w, h) = mask.dims();
    let mut out = BinaryMask::empty(w, h).expect("mask dimensions are positive");
    for y in 0..h {
        for x in 0..w {
            if se
                .offsets()
                .iter()
                .all(|&(dx, dy)| mask.contains(x as isize + dx, y as isize + dy))
            {
                out.set(x, y, true);
            }
        }
    }
    out
}
