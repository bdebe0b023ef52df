//! Stage 3: pixel-level lesion detection on informative frames.
//!
//! Two linear SVMs score every informative pixel on its `(R, G)` values. The
//! strict one (false positives cost 6, false negatives 0.1) marks seeds;
//! the permissive one (costs 1 and 2) marks potential lesion pixels. Seeds
//! grow through potential pixels, and the frame is split into 36×36 boxes: a
//! box is flagged when more than half its pixels are lesion, and the flagged
//! share of all boxes is the frame's lesion likelihood.

use std::collections::VecDeque;

use afb_ml::fisher::FisherModel;
use afb_ml::svm::SvmModel;
use thiserror::Error;

use crate::imaging::{BinaryMask, ImagingError, RgbFrame};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LesionError {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("{0} model is missing")]
    ModelMissing(&'static str),
    #[error("pixel model expects {found} features, lesion stage provides 2")]
    ModelShape { found: usize },
}

/// `(R, G)` of every pixel in the informative mask, in raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelFeatures {
    pub width: usize,
    pub height: usize,
    pub indices: Vec<usize>,
    pub rg: Vec<[f64; 2]>,
}

impl PixelFeatures {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `m_inf_full` must already be at frame resolution.
pub fn pixel_features(frame: &RgbFrame, m_inf_full: &BinaryMask) -> Result<PixelFeatures, LesionError> {
    if m_inf_full.dims() != frame.dims() {
        return Err(ImagingError::DimensionMismatch { expected: frame.dims(), found: m_inf_full.dims() }.into());
    }
    let indices: Vec<usize> = m_inf_full.indices().collect();
    let rg = indices.iter().map(|&i| [frame.red()[i], frame.green()[i]]).collect();
    Ok(PixelFeatures { width: frame.width(), height: frame.height(), indices, rg })
}

fn classify(features: &PixelFeatures, model: Option<&SvmModel>, name: &'static str) -> Result<BinaryMask, LesionError> {
    let model = model.ok_or(LesionError::ModelMissing(name))?;
    if model.dim() != 2 {
        return Err(LesionError::ModelShape { found: model.dim() });
    }
    let mut out = BinaryMask::empty(features.width, features.height)?;
    let bits = out.bits_mut();
    for (&i, x) in features.indices.iter().zip(&features.rg) {
        bits[i] = model.predict(x).0 > 0;
    }
    Ok(out)
}

/// High-confidence lesion pixels from the strict SVM.
pub fn detect_seeds(features: &PixelFeatures, svm1: Option<&SvmModel>) -> Result<BinaryMask, LesionError> {
    classify(features, svm1, "lesion seed")
}

/// Candidate lesion pixels from the permissive SVM.
pub fn detect_potential(features: &PixelFeatures, svm2: Option<&SvmModel>) -> Result<BinaryMask, LesionError> {
    classify(features, svm2, "lesion potential")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Traversal {
    BreadthFirst,
    DepthFirst,
}

/// Pixels of `seeds ∪ potential` 8-connected to a seed through
/// `seeds ∪ potential`.
pub fn region_grow(seeds: &BinaryMask, potential: &BinaryMask) -> Result<BinaryMask, LesionError> {
    region_grow_with(seeds, potential, Traversal::BreadthFirst)
}

pub fn region_grow_with(
    seeds: &BinaryMask,
    potential: &BinaryMask,
    order: Traversal,
) -> Result<BinaryMask, LesionError> {
    let allowed = seeds.union(potential)?;
    let (w, h) = seeds.dims();
    let mut out = BinaryMask::empty(w, h)?;
    let mut frontier: VecDeque<usize> = VecDeque::new();
    for i in seeds.indices() {
        out.bits_mut()[i] = true;
        frontier.push_back(i);
    }
    let allowed = allowed.bits();
    while let Some(i) = match order {
        Traversal::BreadthFirst => frontier.pop_front(),
        Traversal::DepthFirst => frontier.pop_back(),
    } {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if allowed[j] && !out.bits()[j] {
                    out.bits_mut()[j] = true;
                    frontier.push_back(j);
                }
            }
        }
    }
    Ok(out)
}

/// Lesion-pixel counts per box of a `⌊h/s⌋ × ⌊w/s⌋` grid; partial boxes at
/// the right and bottom edges are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrid {
    pub box_size: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major counts.
    pub counts: Vec<usize>,
}

impl BoxGrid {
    pub fn count(&self, row: usize, col: usize) -> usize {
        self.counts[row * self.cols + col]
    }

    pub fn total_boxes(&self) -> usize {
        self.rows * self.cols
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxDecision {
    pub grid: BoxGrid,
    /// `(row, col)` of every box holding more than half lesion pixels.
    pub flagged: Vec<(usize, usize)>,
    /// Flagged boxes over all boxes.
    pub likelihood: f64,
    pub is_lesion_frame: bool,
}

pub fn box_decision(lesion_mask: &BinaryMask, box_size: usize) -> BoxDecision {
    let (w, h) = lesion_mask.dims();
    let s = box_size.max(1);
    let (rows, cols) = (h / s, w / s);
    let mut counts = vec![0usize; rows * cols];
    for i in lesion_mask.indices() {
        let (x, y) = (i % w, i / w);
        let (r, c) = (y / s, x / s);
        if r < rows && c < cols {
            counts[r * cols + c] += 1;
        }
    }
    let half = s * s / 2;
    let mut flagged = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            // Strict majority: with 36×36 boxes, 649 of 1296 pixels.
            if counts[r * cols + c] > half {
                flagged.push((r, c));
            }
        }
    }
    let total = rows * cols;
    let likelihood = if total == 0 { 0.0 } else { flagged.len() as f64 / total as f64 };
    BoxDecision {
        grid: BoxGrid { box_size: s, rows, cols, counts },
        is_lesion_frame: !flagged.is_empty(),
        flagged,
        likelihood,
    }
}

/// Legacy `R/G > threshold` pixel test over the informative mask. Pixels with
/// `G = 0` are positive iff `R > 0`.
pub fn rg_threshold_baseline(
    frame: &RgbFrame,
    m_inf_full: &BinaryMask,
    threshold: f64,
) -> Result<BinaryMask, LesionError> {
    let f = pixel_features(frame, m_inf_full)?;
    let mut out = BinaryMask::empty(f.width, f.height)?;
    for (&i, &[r, g]) in f.indices.iter().zip(&f.rg) {
        out.bits_mut()[i] = rg_positive(r, g, threshold);
    }
    Ok(out)
}

pub fn rg_positive(r: f64, g: f64, threshold: f64) -> bool {
    if g > 0.0 {
        r / g > threshold
    } else {
        r > 0.0
    }
}

/// Fisher discriminant on `(R, G)` over the informative mask.
pub fn fisher_baseline(
    frame: &RgbFrame,
    m_inf_full: &BinaryMask,
    model: &FisherModel,
) -> Result<BinaryMask, LesionError> {
    if model.weights().len() != 2 {
        return Err(LesionError::ModelShape { found: model.weights().len() });
    }
    let f = pixel_features(frame, m_inf_full)?;
    let mut out = BinaryMask::empty(f.width, f.height)?;
    for (&i, x) in f.indices.iter().zip(&f.rg) {
        out.bits_mut()[i] = model.predict(x) > 0;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct LesionResult {
    pub seed_mask: BinaryMask,
    pub potential_mask: BinaryMask,
    pub lesion_mask: BinaryMask,
    pub decision: BoxDecision,
}

impl LesionResult {
    pub fn likelihood(&self) -> f64 {
        self.decision.likelihood
    }

    pub fn is_lesion_frame(&self) -> bool {
        self.decision.is_lesion_frame
    }
}

/// Full stage 3 on one frame. `m_inf` may be at working resolution; it is
/// upsampled to the frame by nearest neighbour.
pub fn analyze_frame(
    frame: &RgbFrame,
    m_inf: &BinaryMask,
    svm1: Option<&SvmModel>,
    svm2: Option<&SvmModel>,
    box_size: usize,
) -> Result<LesionResult, LesionError> {
    let m_full = m_inf.resize_nearest(frame.width(), frame.height())?;
    let features = pixel_features(frame, &m_full)?;
    let seed_mask = detect_seeds(&features, svm1)?;
    let potential_mask = detect_potential(&features, svm2)?;
    let lesion_mask = region_grow(&seed_mask, &potential_mask)?;
    let decision = box_decision(&lesion_mask, box_size);
    Ok(LesionResult { seed_mask, potential_mask, lesion_mask, decision })
}

/// Interleaved 8-bit RGB copy of `frame` with lesion outlines in yellow and
/// flagged boxes outlined in red.
pub fn render_overlay(frame: &RgbFrame, result: &LesionResult) -> Vec<u8> {
    let (w, h) = frame.dims();
    let mut rgb = frame.to_rgb8();
    let mut paint = |x: usize, y: usize, c: [u8; 3]| {
        let i = 3 * (y * w + x);
        rgb[i..i + 3].copy_from_slice(&c);
    };
    let m = &result.lesion_mask;
    for y in 0..h {
        for x in 0..w {
            if !m.get(x, y) {
                continue;
            }
            let (xi, yi) = (x as isize, y as isize);
            let edge = [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|&(dx, dy)| !m.contains(xi + dx, yi + dy));
            if edge {
                paint(x, y, [255, 255, 0]);
            }
        }
    }
    let s = result.decision.grid.box_size;
    for &(r, c) in &result.decision.flagged {
        let (x0, y0) = (c * s, r * s);
        for k in 0..s {
            for t in 0..2.min(s) {
                paint(x0 + k, y0 + t, [255, 0, 0]);
                paint(x0 + k, y0 + s - 1 - t, [255, 0, 0]);
                paint(x0 + t, y0 + k, [255, 0, 0]);
                paint(x0 + s - 1 - t, y0 + k, [255, 0, 0]);
            }
        }
    }
    rgb
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_majority_boundary() {
        for (n, flagged) in [(648, false), (649, true)] {
            let m = BinaryMask::from_fn(36, 36, |x, y| y * 36 + x < n).unwrap();
            let d = box_decision(&m, 36);
            assert_eq!(d.is_lesion_frame, flagged);
            assert_eq!(d.grid.count(0, 0), n);
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(box_decision(&BinaryMask::empty(720, 720).unwrap(), 36).grid.total_boxes(), 400);
        let d = box_decision(&BinaryMask::empty(360, 360).unwrap(), 36);
        assert_eq!((d.grid.rows, d.grid.cols), (10, 10));
        assert_eq!(d.likelihood, 0.0);
        assert!(!d.is_lesion_frame);
    }

    #[test]
    fn rg_rule_is_strict() {
        assert!(rg_positive(0.6, 1.0, 0.53));
        assert!(!rg_positive(0.5, 1.0, 0.53));
        assert!(!rg_positive(0.53, 1.0, 0.53));
        assert!(rg_positive(0.1, 0.0, 0.53));
        assert!(!rg_positive(0.0, 0.0, 0.53));
    }

    #[test]
    fn growth_stays_in_seeded_components() {
        let potential = BinaryMask::from_fn(30, 12, |x, y| (x < 10 && y < 10) || (x >= 15 && y < 5)).unwrap();
        let mut seeds = BinaryMask::empty(30, 12).unwrap();
        seeds.set(4, 4, true);
        let grown = region_grow(&seeds, &potential).unwrap();
        assert_eq!(grown, BinaryMask::from_fn(30, 12, |x, y| x < 10 && y < 10).unwrap());
        assert_eq!(region_grow(&potential, &potential).unwrap(), potential);
        assert!(region_grow(&BinaryMask::empty(30, 12).unwrap(), &potential).unwrap().is_empty());
    }

    #[test]
    fn features_follow_the_mask() {
        let frame = RgbFrame::from_channels(2, 1, vec![0.8, 0.1], vec![0.2, 0.9], vec![0.1, 0.0]).unwrap();
        let m = BinaryMask::from_vec(2, 1, vec![true, false]).unwrap();
        let f = pixel_features(&frame, &m).unwrap();
        assert_eq!(f.rg, vec![[0.8, 0.2]]);
        let none = pixel_features(&frame, &BinaryMask::empty(2, 1).unwrap()).unwrap();
        assert!(none.is_empty());
        assert!(detect_seeds(&none, None).is_err());
    }
}
