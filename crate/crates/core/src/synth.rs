//! Synthetic AFB phantoms with pixel- and frame-level ground truth.
//!
//! A phantom is a dark frame with a circular field of view. Inside it, healthy
//! tissue is green-dominant (`R/G` around 0.3) with multi-octave texture,
//! gentle shading and a vignette. Optional elements:
//!
//! - lesion discs: lower green and `R/G` in `[0.7, 1.2]`, blending into the
//!   surrounding tissue over a thin rim, so lesion and normal pixels overlap;
//! - saturated overexposure blobs with a soft halo;
//! - faint red casts on normal tissue (`R/G` just above 0.53) that a plain
//!   ratio test mistakes for lesions.
//!
//! Uninformative frames are blurred (`σ` of 12 to 16 px at SD), darkened (mean
//! intensity ≤ 0.08) or dominated by overexposure. Frames are quantized to 8
//! bits, so writing them to PNG and reading them back is exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::imaging::{gaussian_smooth, BinaryMask, GrayImage, ImagingError, RgbFrame};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid phantom geometry: {0}")]
    InvalidGeometry(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameSize {
    Sd,
    Hd,
}

impl FrameSize {
    pub fn pixels(self) -> usize {
        match self {
            FrameSize::Sd => 360,
            FrameSize::Hd => 720,
        }
    }

    fn scale(self) -> f64 {
        self.pixels() as f64 / 360.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhantomKind {
    Normal,
    Lesion,
    Blur,
    Dark,
    Overexposed,
}

impl PhantomKind {
    pub const ALL: [PhantomKind; 5] =
        [PhantomKind::Normal, PhantomKind::Lesion, PhantomKind::Blur, PhantomKind::Dark, PhantomKind::Overexposed];

    pub fn name(self) -> &'static str {
        match self {
            PhantomKind::Normal => "normal",
            PhantomKind::Lesion => "lesion",
            PhantomKind::Blur => "blur",
            PhantomKind::Dark => "dark",
            PhantomKind::Overexposed => "overexposed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn label(self) -> FrameLabel {
        match self {
            PhantomKind::Normal => FrameLabel::InformativeNormal,
            PhantomKind::Lesion => FrameLabel::InformativeLesion,
            _ => FrameLabel::Uninformative,
        }
    }

    pub fn is_informative(self) -> bool {
        self.label() != FrameLabel::Uninformative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameLabel {
    InformativeNormal,
    InformativeLesion,
    Uninformative,
}

impl FrameLabel {
    pub fn name(self) -> &'static str {
        match self {
            FrameLabel::InformativeNormal => "informative-normal",
            FrameLabel::InformativeLesion => "informative-lesion",
            FrameLabel::Uninformative => "uninformative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [FrameLabel::InformativeNormal, FrameLabel::InformativeLesion, FrameLabel::Uninformative]
            .into_iter()
            .find(|l| l.name() == s)
    }
}

/// A disc in full-resolution pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl Disc {
    fn dist(&self, x: f64, y: f64) -> f64 {
        ((x - self.cx).powi(2) + (y - self.cy).powi(2)).sqrt()
    }

    fn overlaps(&self, other: &Disc, gap: f64) -> bool {
        self.dist(other.cx, other.cy) < self.radius + other.radius + gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LesionPatch {
    pub disc: Disc,
    /// Target `R/G` ratio in the lesion core.
    pub rg: f64,
    /// Factor applied to the green (and blue) level in the core.
    pub green_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedCast {
    pub disc: Disc,
    pub rg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub seed: u64,
    pub size: FrameSize,
    pub kind: PhantomKind,
    pub lesion_patches: Vec<LesionPatch>,
    pub overexposure_blobs: Vec<Disc>,
    pub red_casts: Vec<RedCast>,
    /// Blur sigma in full-resolution pixels (blur frames only).
    pub blur_sigma: f64,
}

/// Ground truth at full resolution.
#[derive(Debug, Clone)]
pub struct PhantomTruth {
    pub frame_label: FrameLabel,
    pub lesion_mask: BinaryMask,
    pub overexposure_mask: BinaryMask,
    pub foreground_mask: BinaryMask,
}

/// Field-of-view radius as a fraction of the frame side.
const FOV_FRACTION: f64 = 0.46;
/// Share of a lesion radius that is fully lesion-coloured; the rest blends.
const LESION_CORE: f64 = 0.85;
/// Share of a blob radius that is fully saturated.
const BLOB_CORE: f64 = 0.85;

fn fov(size: FrameSize) -> Disc {
    let s = size.pixels() as f64;
    Disc { cx: s / 2.0, cy: s / 2.0, radius: FOV_FRACTION * s }
}

fn random_point_within(rng: &mut ChaCha8Rng, centre: &Disc, max_r: f64) -> (f64, f64) {
    let r = max_r * rng.gen::<f64>().sqrt();
    let t = rng.gen_range(0.0..std::f64::consts::TAU);
    (centre.cx + r * t.cos(), centre.cy + r * t.sin())
}

/// Places a disc inside the field of view clear of `avoid`; gives up after a
/// bounded number of tries.
fn place_disc(
    rng: &mut ChaCha8Rng,
    size: FrameSize,
    radius: f64,
    max_centre: f64,
    avoid: &[Disc],
) -> Option<Disc> {
    let f = fov(size);
    let gap = 6.0 * size.scale();
    for _ in 0..64 {
        let limit = max_centre.min(f.radius - radius - gap);
        if limit <= 0.0 {
            return None;
        }
        let (cx, cy) = random_point_within(rng, &f, limit);
        let d = Disc { cx, cy, radius };
        if !avoid.iter().any(|a| d.overlaps(a, gap)) {
            return Some(d);
        }
    }
    None
}

impl PhantomSpec {
    /// Draws a random geometry for `kind` from `seed`.
    pub fn random(kind: PhantomKind, size: FrameSize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_a1b0);
        let s = size.scale();
        let r_fov = fov(size).radius;
        let mut lesion_patches = Vec::new();
        let mut blobs: Vec<Disc> = Vec::new();
        let mut casts = Vec::new();
        let mut taken: Vec<Disc> = Vec::new();

        if kind == PhantomKind::Lesion {
            let n = if rng.gen_bool(0.25) { 2 } else { 1 };
            for _ in 0..n {
                let radius = rng.gen_range(40.0..65.0) * s;
                if let Some(disc) = place_disc(&mut rng, size, radius, 0.45 * r_fov, &taken) {
                    taken.push(disc);
                    lesion_patches.push(LesionPatch {
                        disc,
                        rg: rng.gen_range(0.7..1.2),
                        green_factor: rng.gen_range(0.55..0.65),
                    });
                }
            }
        }
        if kind == PhantomKind::Normal && rng.gen_bool(0.4) {
            let radius = rng.gen_range(35.0..55.0) * s;
            if let Some(disc) = place_disc(&mut rng, size, radius, 0.5 * r_fov, &taken) {
                taken.push(disc);
                casts.push(RedCast { disc, rg: rng.gen_range(0.54..0.6) });
            }
        }
        match kind {
            PhantomKind::Overexposed => {
                let radius = rng.gen_range(0.74..0.8) * r_fov;
                let f = fov(size);
                let (cx, cy) = random_point_within(&mut rng, &f, r_fov - radius - 2.0 * s);
                blobs.push(Disc { cx, cy, radius });
                for _ in 0..rng.gen_range(0..3) {
                    let radius = rng.gen_range(14.0..24.0) * s;
                    let f = fov(size);
                    let (cx, cy) = random_point_within(&mut rng, &f, r_fov - radius - 2.0 * s);
                    blobs.push(Disc { cx, cy, radius });
                }
            }
            PhantomKind::Normal | PhantomKind::Lesion | PhantomKind::Blur => {
                if rng.gen_bool(0.5) {
                    for _ in 0..rng.gen_range(1..3) {
                        let radius = rng.gen_range(14.0..24.0) * s;
                        if let Some(d) = place_disc(&mut rng, size, radius, r_fov, &taken) {
                            taken.push(d);
                            blobs.push(d);
                        }
                    }
                }
            }
            PhantomKind::Dark => {}
        }
        let blur_sigma = if kind == PhantomKind::Blur { rng.gen_range(12.0..16.0) * s } else { 0.0 };
        Self { seed, size, kind, lesion_patches, overexposure_blobs: blobs, red_casts: casts, blur_sigma }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let f = fov(self.size);
        let discs = self
            .lesion_patches
            .iter()
            .map(|p| ("lesion", p.disc))
            .chain(self.overexposure_blobs.iter().map(|&d| ("blob", d)))
            .chain(self.red_casts.iter().map(|c| ("red cast", c.disc)));
        for (what, d) in discs {
            if !(d.radius > 0.0) || f.dist(d.cx, d.cy) + d.radius > f.radius {
                return Err(SynthError::InvalidGeometry(format!(
                    "{what} at ({:.1}, {:.1}) r={:.1} leaves the field of view",
                    d.cx, d.cy, d.radius
                )));
            }
        }
        for p in &self.lesion_patches {
            if !(p.rg > 0.0) || !(p.green_factor > 0.0 && p.green_factor <= 1.0) {
                return Err(SynthError::InvalidGeometry("lesion colour out of range".into()));
            }
        }
        if self.kind == PhantomKind::Blur && !(self.blur_sigma > 0.0) {
            return Err(SynthError::InvalidGeometry("blur frame needs a positive sigma".into()));
        }
        Ok(())
    }
}

/// Bilinear value noise on a square lattice.
struct NoiseField {
    cell: f64,
    n: usize,
    values: Vec<f64>,
}

impl NoiseField {
    fn new(rng: &mut ChaCha8Rng, side: usize, cell: f64) -> Self {
        let n = (side as f64 / cell).ceil() as usize + 2;
        let values = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self { cell, n, values }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let (fx, fy) = (x / self.cell, y / self.cell);
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let (tx, ty) = (smooth(fx - ix as f64), smooth(fy - iy as f64));
        let v = |i: usize, j: usize| self.values[j.min(self.n - 1) * self.n + i.min(self.n - 1)];
        let top = v(ix, iy) * (1.0 - tx) + v(ix + 1, iy) * tx;
        let bottom = v(ix, iy + 1) * (1.0 - tx) + v(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

struct Texture {
    octaves: Vec<(f64, NoiseField)>,
}

impl Texture {
    fn new(rng: &mut ChaCha8Rng, side: usize, cells: &[(f64, f64)]) -> Self {
        let total: f64 = cells.iter().map(|c| c.1).sum();
        let octaves = cells.iter().map(|&(cell, amp)| (amp / total, NoiseField::new(rng, side, cell))).collect();
        Self { octaves }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        self.octaves.iter().map(|(a, f)| a * f.at(x, y)).sum()
    }
}

fn blend(a: f64, b: f64, w: f64) -> f64 {
    a + (b - a) * w
}

/// Weight that is 1 inside `core·r`, falls linearly to 0 at `r`.
fn rim_weight(d: f64, r: f64, core: f64) -> f64 {
    let inner = core * r;
    if d <= inner {
        1.0
    } else if d >= r {
        0.0
    } else {
        (r - d) / (r - inner)
    }
}

fn disc_mask(side: usize, discs: impl Iterator<Item = Disc> + Clone) -> Result<BinaryMask, ImagingError> {
    BinaryMask::from_fn(side, side, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        discs.clone().any(|d| d.dist(px, py) <= d.radius)
    })
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Renders a phantom. Deterministic in `spec`.
pub fn generate(spec: &PhantomSpec) -> Result<(RgbFrame, PhantomTruth), SynthError> {
    spec.validate()?;
    let side = spec.size.pixels();
    let s = spec.size.scale();
    let f = fov(spec.size);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let base_g = rng.gen_range(0.6..0.72);
    let base_q = rng.gen_range(0.28..0.36);
    let base_b = rng.gen_range(0.1..0.14);
    let tex_amp = rng.gen_range(0.35..0.5);
    let fine = Texture::new(&mut rng, side, &[(4.0 * s, 0.35), (8.0 * s, 0.3), (16.0 * s, 0.2), (32.0 * s, 0.15)]);
    let hue = Texture::new(&mut rng, side, &[(8.0 * s, 0.5), (24.0 * s, 0.5)]);
    let shading = Texture::new(&mut rng, side, &[(90.0 * s, 1.0)]);

    let n = side * side;
    let (mut r, mut g, mut b) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for y in 0..side {
        for x in 0..side {
            let i = y * side + x;
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let d = f.dist(px, py);
            if d > f.radius {
                r[i] = 0.02 + rng.gen_range(-0.01..0.01);
                g[i] = 0.02 + rng.gen_range(-0.01..0.01);
                b[i] = 0.02 + rng.gen_range(-0.01..0.01);
                continue;
            }
            let vignette = 1.0 - 0.35 * (d / f.radius).powi(2);
            let t = fine.at(px, py);
            let h = hue.at(px, py);
            let tone = base_g * (1.0 + 0.15 * shading.at(px, py)) * vignette;
            let mut level = 1.0;
            let mut q = base_q * (1.0 + 0.15 * h);
            let mut bv = base_b * vignette * (1.0 + 0.3 * t);
            for c in &spec.red_casts {
                let w = rim_weight(c.disc.dist(px, py), c.disc.radius, 0.8);
                q = blend(q, c.rg * (1.0 + 0.05 * h), w);
            }
            for p in &spec.lesion_patches {
                let w = rim_weight(p.disc.dist(px, py), p.disc.radius, LESION_CORE);
                if w > 0.0 {
                    level *= blend(1.0, p.green_factor, w);
                    bv *= blend(1.0, p.green_factor, w);
                    q = blend(q, p.rg * (1.0 + 0.08 * h), w);
                }
            }
            // Lesions lower the green level but keep the tissue texture.
            let mut gv = tone * (level + tex_amp * t);
            let mut rv = q * gv;
            for blob in &spec.overexposure_blobs {
                let w = rim_weight(blob.dist(px, py), blob.radius, BLOB_CORE);
                if w > 0.0 {
                    rv = blend(rv, 1.0, w);
                    gv = blend(gv, 1.0, w);
                    bv = blend(bv, 1.0, w);
                }
            }
            let noise = 0.012;
            r[i] = rv + rng.gen_range(-noise..noise);
            g[i] = gv + rng.gen_range(-noise..noise);
            b[i] = bv + rng.gen_range(-noise..noise);
        }
    }

    match spec.kind {
        PhantomKind::Blur => {
            let ksize = 2 * (3.0 * spec.blur_sigma).ceil() as usize + 1;
            for ch in [&mut r, &mut g, &mut b] {
                let img = GrayImage::from_vec(side, side, std::mem::take(ch))?;
                *ch = gaussian_smooth(&img, spec.blur_sigma, ksize)?.into_vec();
            }
        }
        PhantomKind::Dark => {
            let intensity = |i: usize| (r[i].clamp(0.0, 1.0) + g[i].clamp(0.0, 1.0) + b[i].clamp(0.0, 1.0)) / 3.0;
            let mean = (0..n).map(intensity).sum::<f64>() / n as f64;
            let max = (0..n).map(intensity).fold(0.0f64, f64::max);
            let k = (0.07 / mean).min(0.09 / max).min(1.0);
            for ch in [&mut r, &mut g, &mut b] {
                ch.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0) * k);
            }
        }
        _ => {}
    }

    let mut rgb8 = Vec::with_capacity(3 * n);
    for i in 0..n {
        rgb8.extend_from_slice(&[quantize(r[i]), quantize(g[i]), quantize(b[i])]);
    }
    let frame = RgbFrame::from_rgb8(side, side, &rgb8)?;

    let lesion_mask = disc_mask(side, spec.lesion_patches.iter().map(|p| p.disc))?;
    let overexposure_mask = disc_mask(
        side,
        spec.overexposure_blobs.iter().map(|d| Disc { radius: d.radius * BLOB_CORE, ..*d }),
    )?;
    let foreground_mask = disc_mask(side, std::iter::once(f))?;
    let truth = PhantomTruth { frame_label: spec.kind.label(), lesion_mask, overexposure_mask, foreground_mask };
    Ok((frame, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// One frame of a corpus, rendered on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub index: usize,
    pub spec: PhantomSpec,
    pub split: Split,
}

impl CorpusEntry {
    pub fn render(&self) -> Result<(RgbFrame, PhantomTruth), SynthError> {
        generate(&self.spec)
    }
}

/// Per-frame seed derived from the corpus seed and the frame index.
pub fn frame_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng.gen()
}

/// Marks `train_fraction` of each kind as training frames, choosing them by a
/// seeded hash of the index so the split is stable and independent of order.
fn assign_splits(entries: &mut [CorpusEntry], seed: u64, train_fraction: f64) {
    for kind in PhantomKind::ALL {
        let mut idx: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].spec.kind == kind).collect();
        idx.sort_by_key(|&i| (frame_seed(seed ^ 0x5917, entries[i].index), i));
        let n_train = (idx.len() as f64 * train_fraction).round() as usize;
        for (rank, &i) in idx.iter().enumerate() {
            entries[i].split = if rank < n_train { Split::Train } else { Split::Test };
        }
    }
}

fn build(kinds: &[PhantomKind], size: FrameSize, seed: u64, train_fraction: f64) -> Vec<CorpusEntry> {
    let mut entries: Vec<CorpusEntry> = kinds
        .iter()
        .enumerate()
        .map(|(index, &kind)| CorpusEntry {
            index,
            spec: PhantomSpec::random(kind, size, frame_seed(seed, index)),
            split: Split::Train,
        })
        .collect();
    assign_splits(&mut entries, seed, train_fraction);
    entries
}

/// `n_per_kind` frames of every kind, interleaved, with an 80/20 split per
/// kind.
pub fn generate_corpus(n_per_kind: usize, size: FrameSize, seed: u64) -> Vec<CorpusEntry> {
    let kinds: Vec<PhantomKind> = (0..n_per_kind).flat_map(|_| PhantomKind::ALL).collect();
    build(&kinds, size, seed, 0.8)
}

/// `n_per_label` informative frames (normal and lesion alternating) and as
/// many uninformative frames (blur, dark and overexposed in turn).
pub fn frame_classification_corpus(n_per_label: usize, size: FrameSize, seed: u64) -> Vec<CorpusEntry> {
    let informative = [PhantomKind::Normal, PhantomKind::Lesion];
    let uninformative = [PhantomKind::Blur, PhantomKind::Dark, PhantomKind::Overexposed];
    let kinds: Vec<PhantomKind> = (0..n_per_label)
        .flat_map(|i| [informative[i % 2], uninformative[i % 3]])
        .collect();
    build(&kinds, size, seed, 0.8)
}

/// An informative-only sequence; frames in the middle half show a lesion
/// when `lesion_share` is `Middle`, every frame does when it is `All`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LesionShare {
    Middle,
    All,
}

pub fn lesion_sequence(n: usize, share: LesionShare, size: FrameSize, seed: u64) -> Vec<CorpusEntry> {
    let kinds: Vec<PhantomKind> = (0..n)
        .map(|i| match share {
            LesionShare::All => PhantomKind::Lesion,
            LesionShare::Middle if (n / 4..n - n / 4).contains(&i) => PhantomKind::Lesion,
            LesionShare::Middle => PhantomKind::Normal,
        })
        .collect();
    let mut entries = build(&kinds, size, seed, 0.8);
    entries.iter_mut().for_each(|e| e.split = Split::Test);
    entries
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::to_intensity;

    #[test]
    fn generation_is_deterministic() {
        let spec = PhantomSpec::random(PhantomKind::Lesion, FrameSize::Sd, 7);
        let (a, _) = generate(&spec).unwrap();
        let (b, _) = generate(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dark_frames_are_dark() {
        for seed in 0..4 {
            let spec = PhantomSpec::random(PhantomKind::Dark, FrameSize::Sd, seed);
            let (frame, _) = generate(&spec).unwrap();
            let i = to_intensity(&frame);
            assert!(i.mean() <= 0.08);
            assert!(i.min_max().1 < 0.1);
        }
    }

    #[test]
    fn lesion_truth_is_the_disc() {
        let mut spec = PhantomSpec::random(PhantomKind::Lesion, FrameSize::Sd, 3);
        let disc = Disc { cx: 180.0, cy: 170.0, radius: 45.0 };
        spec.lesion_patches = vec![LesionPatch { disc, rg: 0.9, green_factor: 0.6 }];
        spec.overexposure_blobs.clear();
        let (_, truth) = generate(&spec).unwrap();
        let expected = BinaryMask::from_fn(360, 360, |x, y| disc.dist(x as f64 + 0.5, y as f64 + 0.5) <= 45.0).unwrap();
        assert_eq!(truth.lesion_mask, expected);
        assert_eq!(truth.frame_label, FrameLabel::InformativeLesion);
    }

    #[test]
    fn geometry_outside_the_view_is_rejected() {
        let mut spec = PhantomSpec::random(PhantomKind::Normal, FrameSize::Sd, 1);
        spec.overexposure_blobs.push(Disc { cx: 5.0, cy: 5.0, radius: 10.0 });
        assert!(matches!(generate(&spec), Err(SynthError::InvalidGeometry(_))));
    }

    #[test]
    fn corpus_is_balanced_and_split_per_kind() {
        let c = generate_corpus(10, FrameSize::Sd, 4);
        assert_eq!(c.len(), 50);
        for kind in PhantomKind::ALL {
            let of_kind: Vec<_> = c.iter().filter(|e| e.spec.kind == kind).collect();
            assert_eq!(of_kind.len(), 10);
            assert_eq!(of_kind.iter().filter(|e| e.split == Split::Train).count(), 8);
        }
        assert_eq!(c, generate_corpus(10, FrameSize::Sd, 4));
    }
}
