use super::ImagingError;

/// Single-channel floating-point image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, fill: f64) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        Ok(Self { width, height, data: vec![fill; width * height] })
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(ImagingError::BufferSize { expected: width * height, found: data.len() });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ImagingError::NonFinite);
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self { width, height, data })
    }

    pub(crate) fn from_parts_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Pixel lookup with replicate (clamp-to-edge) padding.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Per-pixel boolean set over a `width × height` grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(width: usize, height: usize) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        Ok(Self { width, height, bits: vec![false; width * height] })
    }

    pub fn full(width: usize, height: usize) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        Ok(Self { width, height, bits: vec![true; width * height] })
    }

    pub fn from_vec(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        if bits.len() != width * height {
            return Err(ImagingError::BufferSize { expected: width * height, found: bits.len() });
        }
        Ok(Self { width, height, bits })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> bool,
    ) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Ok(Self { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    /// Membership test that treats off-grid positions as outside.
    #[inline]
    pub fn contains(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    fn check_same(&self, other: &Self) -> Result<(), ImagingError> {
        if self.dims() != other.dims() {
            return Err(ImagingError::DimensionMismatch { expected: self.dims(), found: other.dims() });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Result<Self, ImagingError> {
        self.check_same(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { width: self.width, height: self.height, bits })
    }

    pub fn union(&self, other: &Self) -> Result<Self, ImagingError> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self, ImagingError> {
        self.zip_with(other, |a, b| a && b)
    }

    /// `self \ other`.
    pub fn difference(&self, other: &Self) -> Result<Self, ImagingError> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn is_subset_of(&self, other: &Self) -> Result<bool, ImagingError> {
        self.check_same(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b))
    }

    /// Nearest-neighbour resize; masks are categorical so no interpolation.
    pub fn resize_nearest(&self, width: usize, height: usize) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        let xs: Vec<usize> = (0..width).map(|x| x * self.width / width).collect();
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            let sy = y * self.height / height;
            let row = &self.bits[sy * self.width..(sy + 1) * self.width];
            bits.extend(xs.iter().map(|&sx| row[sx]));
        }
        Ok(Self { width, height, bits })
    }

    /// Indices (`y * width + x`) of member pixels in raster order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// Three-channel frame with channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbFrame {
    width: usize,
    height: usize,
    r: Vec<f64>,
    g: Vec<f64>,
    b: Vec<f64>,
}

impl RgbFrame {
    /// Builds a frame from interleaved 8-bit RGB, mapping `v` to `v / 255`.
    pub fn from_rgb8(width: usize, height: usize, rgb: &[u8]) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        if rgb.len() != 3 * width * height {
            return Err(ImagingError::BufferSize { expected: 3 * width * height, found: rgb.len() });
        }
        let n = width * height;
        let (mut r, mut g, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for px in rgb.chunks_exact(3) {
            r.push(f64::from(px[0]) / 255.0);
            g.push(f64::from(px[1]) / 255.0);
            b.push(f64::from(px[2]) / 255.0);
        }
        Ok(Self { width, height, r, g, b })
    }

    pub fn from_channels(
        width: usize,
        height: usize,
        r: Vec<f64>,
        g: Vec<f64>,
        b: Vec<f64>,
    ) -> Result<Self, ImagingError> {
        check_dims(width, height)?;
        for ch in [&r, &g, &b] {
            if ch.len() != width * height {
                return Err(ImagingError::BufferSize { expected: width * height, found: ch.len() });
            }
            if ch.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(ImagingError::OutOfRange);
            }
        }
        Ok(Self { width, height, r, g, b })
    }

    /// Interleaved 8-bit RGB, rounding to the nearest level.
    pub fn to_rgb8(&self) -> Vec<u8> {
        let q = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
        let mut out = Vec::with_capacity(3 * self.r.len());
        for i in 0..self.r.len() {
            out.extend_from_slice(&[q(self.r[i]), q(self.g[i]), q(self.b[i])]);
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn red(&self) -> &[f64] {
        &self.r
    }

    pub fn green(&self) -> &[f64] {
        &self.g
    }

    pub fn blue(&self) -> &[f64] {
        &self.b
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = y * self.width + x;
        [self.r[i], self.g[i], self.b[i]]
    }
}

/// Flat structuring element given as pixel offsets `(dx, dy)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    offsets: Vec<(isize, isize)>,
}

/// Orientation of a three-pixel line element inside a 3×3 neighbourhood,
/// measured counter-clockwise from the +x axis with y pointing down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineAngle {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl LineAngle {
    pub const ALL: [LineAngle; 4] = [LineAngle::Deg0, LineAngle::Deg45, LineAngle::Deg90, LineAngle::Deg135];
}

impl StructuringElement {
    pub fn new(offsets: Vec<(isize, isize)>) -> Result<Self, ImagingError> {
        if offsets.is_empty() {
            return Err(ImagingError::EmptyStructuringElement);
        }
        for (i, o) in offsets.iter().enumerate() {
            if offsets[..i].contains(o) {
                return Err(ImagingError::DuplicateOffset(o.0, o.1));
            }
        }
        Ok(Self { offsets })
    }

    /// 1×3 line through the origin.
    pub fn line(angle: LineAngle) -> Self {
        let (dx, dy) = match angle {
            LineAngle::Deg0 => (1, 0),
            LineAngle::Deg45 => (1, -1),
            LineAngle::Deg90 => (0, 1),
            LineAngle::Deg135 => (1, 1),
        };
        Self { offsets: vec![(-dx, -dy), (0, 0), (dx, dy)] }
    }

    /// `(2r+1)²` square centred on the origin.
    pub fn square(radius: usize) -> Self {
        let r = radius as isize;
        let offsets = (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dx, dy))).collect();
        Self { offsets }
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }
}

fn check_dims(width: usize, height: usize) -> Result<(), ImagingError> {
    if width == 0 || height == 0 {
        Err(ImagingError::ZeroDimension)
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_set_algebra() {
        let a = BinaryMask::from_fn(4, 4, |x, _| x < 2).unwrap();
        let b = BinaryMask::from_fn(4, 4, |_, y| y < 2).unwrap();
        assert_eq!(a.union(&b).unwrap().count(), 12);
        assert_eq!(a.intersection(&b).unwrap().count(), 4);
        assert_eq!(a.difference(&b).unwrap().count(), 4);
        assert!(a.intersection(&b).unwrap().is_subset_of(&a).unwrap());
        let c = BinaryMask::empty(3, 4).unwrap();
        assert!(matches!(a.union(&c), Err(ImagingError::DimensionMismatch { .. })));
    }

    #[test]
    fn structuring_element_validation() {
        assert!(StructuringElement::new(vec![]).is_err());
        assert!(StructuringElement::new(vec![(0, 0), (1, 0), (0, 0)]).is_err());
        assert_eq!(StructuringElement::square(1).offsets().len(), 9);
        for a in LineAngle::ALL {
            assert_eq!(StructuringElement::line(a).offsets().len(), 3);
        }
    }

    #[test]
    fn rgb8_round_trip() {
        let bytes: Vec<u8> = (0..27).map(|v| (v * 9) as u8).collect();
        let f = RgbFrame::from_rgb8(3, 3, &bytes).unwrap();
        assert_eq!(f.to_rgb8(), bytes);
        assert!(RgbFrame::from_rgb8(3, 3, &bytes[1..]).is_err());
    }

    #[test]
    fn nearest_upsample_replicates_blocks() {
        let m = BinaryMask::from_fn(2, 2, |x, y| x == y).unwrap();
        let up = m.resize_nearest(4, 4).unwrap();
        assert!(up.get(0, 0) && up.get(1, 1) && up.get(3, 3) && up.get(2, 3));
        assert!(!up.get(2, 0));
        assert_eq!(up.count(), 8);
    }
}
