//! Trainers for every model the pipeline loads.
//!
//! - Overexposure SVM: k-means (k = 3) on `(I_int, I_en)` over the
//!   foreground pixels of frames that contain overexposure splits them into
//!   dark, normal and overexposed regions; the two bright classes are eroded, a balanced pixel
//!   sample is drawn and an RBF SVM is fitted after a `(C, gamma)` grid
//!   search.
//! - Lesion SVMs: linear SVMs on `(R, G)` of informative pixels, positives
//!   from the ground-truth lesion masks, with asymmetric class costs; a
//!   Fisher discriminant on the same pixels serves as a baseline.
//! - Frame classifiers: boosted trees (plus optionally the shallow network
//!   and Fisher's discriminant) on the seven frame features.
//!
//! All randomness derives from one seed, and frames are consumed in index
//! order, so a fixed seed reproduces every model bit for bit.

use std::path::Path;

use afb_ml::boost::{self, BoostParams, BoostedTrees};
use afb_ml::cv::{cross_validate_svm, hyperparam_search, split_fold, stratified_folds, SvmGrid};
use afb_ml::fisher::{self, FisherModel};
use afb_ml::kmeans::kmeans;
use afb_ml::mlp::{self, MlpParams, ShallowNet};
use afb_ml::svm::{self, Kernel, SvmModel, SvmParams};
use afb_ml::MlError;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::Config;
use crate::features::{frame_features, FeatureError, FeatureVector7};
use crate::imaging::{binary_erode, BinaryMask, ImagingError, RgbFrame, StructuringElement};
use crate::io::{load_frame, load_mask, IoError, ManifestEntry};
use crate::lesion::pixel_features;
use crate::pipeline::{
    write_model, FrameClassifier, PipelineError, FRAME_BOOSTED_FILE, FRAME_FISHER_FILE, FRAME_MLP_FILE,
    LESION_FISHER_FILE, LESION_POTENTIAL_FILE, LESION_SEED_FILE, OVEREXPOSURE_FILE,
};
use crate::preprocess::{exposure_images, run_preprocess, PreprocessError};
use crate::synth::{CorpusEntry, FrameLabel, PhantomKind, Split, SynthError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Lesion(#[from] crate::lesion::LesionError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("not enough {what}: need {needed}, found {found}")]
    NotEnough { what: &'static str, needed: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameMeta {
    pub index: usize,
    pub kind: PhantomKind,
    pub label: FrameLabel,
    pub split: Split,
}

/// A frame with its pixel-level ground truth.
#[derive(Debug, Clone)]
pub struct LabeledFrame {
    pub frame: RgbFrame,
    pub lesion_mask: BinaryMask,
    pub overexposure_mask: BinaryMask,
}

/// A training corpus: frame metadata up front, pixels on demand.
pub trait FrameSource: Sync {
    fn metas(&self) -> Vec<FrameMeta>;
    /// Loads the frame at position `k` of [`FrameSource::metas`].
    fn load(&self, k: usize) -> Result<LabeledFrame, TrainError>;
}

/// Frames and masks on disk, as listed by a manifest.
pub struct ManifestSource {
    entries: Vec<ManifestEntry>,
}

impl ManifestSource {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        Self { entries }
    }
}

impl FrameSource for ManifestSource {
    fn metas(&self) -> Vec<FrameMeta> {
        self.entries
            .iter()
            .map(|e| FrameMeta { index: e.index, kind: e.kind, label: e.label, split: e.split })
            .collect()
    }

    fn load(&self, k: usize) -> Result<LabeledFrame, TrainError> {
        let e = &self.entries[k];
        Ok(LabeledFrame {
            frame: load_frame(&e.frame)?,
            lesion_mask: load_mask(&e.lesion_mask)?,
            overexposure_mask: load_mask(&e.overexposure_mask)?,
        })
    }
}

/// Phantom frames rendered in memory.
pub struct SynthSource {
    entries: Vec<CorpusEntry>,
}

impl SynthSource {
    pub fn new(entries: Vec<CorpusEntry>) -> Self {
        Self { entries }
    }
}

impl FrameSource for SynthSource {
    fn metas(&self) -> Vec<FrameMeta> {
        self.entries
            .iter()
            .map(|e| FrameMeta { index: e.index, kind: e.spec.kind, label: e.spec.kind.label(), split: e.split })
            .collect()
    }

    fn load(&self, k: usize) -> Result<LabeledFrame, TrainError> {
        let (frame, truth) = self.entries[k].render()?;
        Ok(LabeledFrame { frame, lesion_mask: truth.lesion_mask, overexposure_mask: truth.overexposure_mask })
    }
}

/// Independent random stream number `stream` of `seed`.
fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform fixed-size sample of a stream (Algorithm R).
struct Reservoir<T> {
    cap: usize,
    seen: usize,
    items: Vec<T>,
    rng: ChaCha8Rng,
}

impl<T> Reservoir<T> {
    fn new(cap: usize, rng: ChaCha8Rng) -> Self {
        Self { cap, seen: 0, items: Vec::with_capacity(cap), rng }
    }

    fn push(&mut self, item: T) {
        if self.items.len() < self.cap {
            self.items.push(item);
        } else {
            let j = self.rng.gen_range(0..=self.seen);
            if j < self.cap {
                self.items[j] = item;
            }
        }
        self.seen += 1;
    }

    /// The sample in random order.
    fn into_shuffled(mut self) -> Vec<T> {
        self.items.shuffle(&mut self.rng);
        self.items
    }
}

/// Frames whose stage-1 content cannot be segmented are skipped by the
/// trainers, exactly as the pipeline rules them uninformative.
fn contained(e: &PreprocessError) -> bool {
    matches!(e, PreprocessError::DegenerateHistogram { .. } | PreprocessError::InitDegenerate)
}

fn balanced(pos: Vec<[f64; 2]>, neg: Vec<[f64; 2]>) -> (Vec<Vec<f64>>, Vec<i8>) {
    let n = pos.len().min(neg.len());
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(2 * n);
    for (p, q) in pos.into_iter().zip(neg).take(n) {
        x.push(p.to_vec());
        y.push(1);
        x.push(q.to_vec());
        y.push(-1);
    }
    (x, y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverexposureReport {
    /// Indices of the frames the labels were bootstrapped from.
    pub frames: Vec<usize>,
    /// `(I_int, I_en)` centroids of the dark, normal and overexposed clusters.
    pub centroids: Vec<[f64; 2]>,
    pub pixels_per_class: usize,
    pub search_pixels: usize,
    pub c: f64,
    pub gamma: f64,
    pub search_cv_accuracy: f64,
    /// k-fold accuracy of the chosen `(C, gamma)` on the full pixel sample.
    pub cv_accuracy: f64,
    pub n_support: usize,
}

/// The balanced overexposed (+1) / normal (−1) pixel sample.
#[derive(Debug, Clone)]
pub struct PixelSample {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<i8>,
}

/// Bootstraps overexposure labels with k-means and returns the balanced
/// `(I_int, I_en)` sample, the frames used and the cluster centroids.
pub fn overexposure_sample(
    source: &dyn FrameSource,
    cfg: &Config,
    seed: u64,
) -> Result<(PixelSample, Vec<usize>, Vec<[f64; 2]>), TrainError> {
    let want = cfg.train.overexposure_frames;
    let metas = source.metas();
    let mut order: Vec<usize> = (0..metas.len())
        .filter(|&k| {
            let m = &metas[k];
            m.split == Split::Train
                && matches!(m.kind, PhantomKind::Normal | PhantomKind::Lesion | PhantomKind::Overexposed)
        })
        .collect();
    order.sort_by_key(|&k| metas[k].index);

    let mut frames = Vec::new();
    let mut used = Vec::new();
    for k in order {
        if frames.len() == want {
            break;
        }
        let lf = source.load(k)?;
        if lf.overexposure_mask.is_empty() {
            continue;
        }
        match exposure_images(&lf.frame, cfg) {
            Ok(ex) => {
                used.push(metas[k].index);
                frames.push(ex);
            }
            Err(e) if contained(&e) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    if frames.is_empty() {
        return Err(TrainError::NotEnough { what: "training frames with overexposure", needed: want, found: 0 });
    }
    if frames.len() < want {
        log::warn!("only {} of {want} overexposure training frames available", frames.len());
    }

    // Clustering runs on foreground pixels only: the SVM never sees the
    // background, and dark background texture would otherwise claim clusters.
    let points: Vec<Vec<f64>> = frames
        .iter()
        .flat_map(|ex| ex.m_fore.indices().map(|i| vec![ex.i_int.data()[i], ex.i_en.data()[i]]))
        .collect();
    let km = kmeans(&points, 3, seed, 100)?;
    let rank = km.rank_by(0);
    let (normal, over) = (rank[1], rank[2]);
    let centroids = rank.iter().map(|&c| [km.centroids[c][0], km.centroids[c][1]]).collect();

    let per_class = cfg.train.overexposure_pixels / 2;
    let mut pos = Reservoir::new(per_class, stream_rng(seed, 1));
    let mut neg = Reservoir::new(per_class, stream_rng(seed, 2));
    let se = StructuringElement::square(1);
    let mut assignments = km.assignments.iter();
    for ex in &frames {
        let (w, h) = ex.i_int.dims();
        let mut cluster = vec![usize::MAX; w * h];
        for i in ex.m_fore.indices() {
            cluster[i] = *assignments.next().expect("one assignment per foreground pixel");
        }
        let region = |c: usize| -> Result<BinaryMask, TrainError> {
            let m = BinaryMask::from_vec(w, h, cluster.iter().map(|&a| a == c).collect())?;
            Ok(binary_erode(&m, &se))
        };
        let (m_over, m_norm) = (region(over)?, region(normal)?);
        let feat = |i: usize| [ex.i_int.data()[i], ex.i_en.data()[i]];
        m_over.indices().for_each(|i| pos.push(feat(i)));
        m_norm.indices().for_each(|i| neg.push(feat(i)));
    }
    let (pos, neg) = (pos.into_shuffled(), neg.into_shuffled());
    if pos.len() < per_class || neg.len() < per_class {
        log::warn!(
            "overexposure sample short of {per_class} per class: {} overexposed, {} normal",
            pos.len(),
            neg.len()
        );
    }
    let (x, y) = balanced(pos, neg);
    if x.is_empty() {
        return Err(TrainError::NotEnough { what: "overexposure training pixels", needed: per_class, found: 0 });
    }
    Ok((PixelSample { x, y }, used, centroids))
}

/// Grid-searches `(C, gamma)` on a balanced subsample of `sample`, then
/// cross-validates and fits the chosen RBF SVM on the whole sample.
pub fn fit_overexposure_svm(
    sample: &PixelSample,
    cfg: &Config,
    seed: u64,
) -> Result<(SvmModel, f64, f64, f64, f64), TrainError> {
    let t = &cfg.train;
    // `balanced` interleaves the classes, so a prefix is itself balanced.
    let m = t.search_pixels.min(sample.x.len());
    let grid = SvmGrid::log_spaced(t.grid_size, (-1.0, 3.0), (-1.0, 3.0));
    let search = hyperparam_search(&sample.x[..m], &sample.y[..m], &grid, t.folds, seed, &SvmParams::default())?;
    let params = SvmParams::new(search.c, Kernel::Rbf { gamma: search.gamma });
    let cv = cross_validate_svm(&sample.x, &sample.y, &params, t.folds, seed)?;
    let fit = svm::train(&sample.x, &sample.y, &params)?;
    Ok((fit.model, search.c, search.gamma, search.cv_accuracy, cv.accuracy))
}

pub fn train_overexposure(
    source: &dyn FrameSource,
    cfg: &Config,
    seed: u64,
) -> Result<(SvmModel, OverexposureReport), TrainError> {
    let (sample, frames, centroids) = overexposure_sample(source, cfg, seed)?;
    let (model, c, gamma, search_cv_accuracy, cv_accuracy) = fit_overexposure_svm(&sample, cfg, seed)?;
    log::info!("overexposure SVM: C={c} gamma={gamma}, {}-fold CV accuracy {cv_accuracy:.4}", cfg.train.folds);
    let report = OverexposureReport {
        frames,
        centroids,
        pixels_per_class: sample.x.len() / 2,
        search_pixels: cfg.train.search_pixels.min(sample.x.len()),
        c,
        gamma,
        search_cv_accuracy,
        cv_accuracy,
        n_support: model.n_support(),
    };
    Ok((model, report))
}

/// Square dilation with half-width `r`, done as two running maxima.
fn dilate_square(mask: &BinaryMask, r: usize) -> Result<BinaryMask, ImagingError> {
    let (w, h) = mask.dims();
    let pass = |src: &[bool], len: usize, stride: usize, lines: usize, step: usize| -> Vec<bool> {
        let mut out = vec![false; src.len()];
        for line in 0..lines {
            let base = line * step;
            let mut last: Option<usize> = None;
            // Nearest set position at or before `i` within the line, scanned
            // forwards, then the same backwards.
            for i in 0..len {
                if src[base + i * stride] {
                    last = Some(i);
                }
                if last.is_some_and(|l| i - l <= r) {
                    out[base + i * stride] = true;
                }
            }
            last = None;
            for i in (0..len).rev() {
                if src[base + i * stride] {
                    last = Some(i);
                }
                if last.is_some_and(|l| l - i <= r) {
                    out[base + i * stride] = true;
                }
            }
        }
        out
    };
    let rows = pass(mask.bits(), w, 1, h, w);
    let both = pass(&rows, h, w, w, 1);
    BinaryMask::from_vec(w, h, both)
}

/// Width of the partial-volume rim around a ground-truth lesion core that is
/// excluded from negative pixels, at 720 px frame width.
const LESION_RIM_PX: f64 = 12.0;

#[derive(Debug, Clone)]
pub struct LesionModels {
    pub seed: SvmModel,
    pub potential: SvmModel,
    pub fisher: FisherModel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LesionReport {
    pub lesion_frames: Vec<usize>,
    pub normal_frames: Vec<usize>,
    pub pixels_per_class: usize,
    pub seed_cv_accuracy: f64,
    pub potential_cv_accuracy: f64,
    pub seed_support: usize,
    pub potential_support: usize,
    /// Share of training pixels called lesion by the seed SVM that the
    /// potential SVM also calls lesion.
    pub containment: f64,
    pub fisher_training_accuracy: f64,
}

/// Balanced `(R, G)` lesion (+1) / normal (−1) sample from informative
/// pixels of training frames.
pub fn lesion_sample(
    source: &dyn FrameSource,
    overexposure: &SvmModel,
    cfg: &Config,
    seed: u64,
) -> Result<(PixelSample, Vec<usize>, Vec<usize>), TrainError> {
    let metas = source.metas();
    let mut order: Vec<usize> = (0..metas.len()).filter(|&k| metas[k].split == Split::Train).collect();
    order.sort_by_key(|&k| metas[k].index);
    let per_class = cfg.lesion.pixels_per_class;
    let mut pos = Reservoir::new(per_class, stream_rng(seed, 3));
    let mut neg = Reservoir::new(per_class, stream_rng(seed, 4));
    let (mut lesion_frames, mut normal_frames) = (Vec::new(), Vec::new());
    for k in order {
        let meta = metas[k];
        let (list, want) = match meta.label {
            FrameLabel::InformativeLesion => (&mut lesion_frames, cfg.train.lesion_frames),
            FrameLabel::InformativeNormal => (&mut normal_frames, cfg.train.normal_frames),
            FrameLabel::Uninformative => continue,
        };
        if list.len() >= want {
            continue;
        }
        let lf = source.load(k)?;
        if meta.label == FrameLabel::InformativeLesion && lf.lesion_mask.is_empty() {
            continue;
        }
        let pre = match run_preprocess(&lf.frame, Some(overexposure), cfg) {
            Ok(p) => p,
            Err(e) if contained(&e) => continue,
            Err(e) => return Err(e.into()),
        };
        let (w, h) = lf.frame.dims();
        let m_inf = pre.m_fore.difference(&pre.m_over)?.resize_nearest(w, h)?;
        let rim = (LESION_RIM_PX * w as f64 / 720.0).ceil() as usize;
        let near_lesion = dilate_square(&lf.lesion_mask, rim)?;
        let outside = BinaryMask::full(w, h)?.difference(&lf.lesion_mask)?;
        let core = BinaryMask::full(w, h)?.difference(&dilate_square(&outside, rim)?)?;
        let positives = core.intersection(&m_inf)?;
        let negatives = m_inf.difference(&near_lesion)?;
        for p in pixel_features(&lf.frame, &positives)?.rg {
            pos.push(p);
        }
        for q in pixel_features(&lf.frame, &negatives)?.rg {
            neg.push(q);
        }
        list.push(meta.index);
    }
    for (what, list, want) in [
        ("lesion training frames", &lesion_frames, cfg.train.lesion_frames),
        ("normal training frames", &normal_frames, cfg.train.normal_frames),
    ] {
        if list.is_empty() {
            return Err(TrainError::NotEnough { what, needed: want, found: 0 });
        }
        if list.len() < want {
            log::warn!("only {} of {want} {what} available", list.len());
        }
    }
    let (x, y) = balanced(pos.into_shuffled(), neg.into_shuffled());
    Ok((PixelSample { x, y }, lesion_frames, normal_frames))
}

/// Cost pairs (false positive, false negative) of the strict seed SVM and
/// the permissive potential SVM.
pub const SEED_COSTS: (f64, f64) = (6.0, 0.1);
pub const POTENTIAL_COSTS: (f64, f64) = (1.0, 2.0);

pub fn train_lesion(
    source: &dyn FrameSource,
    overexposure: &SvmModel,
    cfg: &Config,
    seed: u64,
) -> Result<(LesionModels, LesionReport), TrainError> {
    let (sample, lesion_frames, normal_frames) = lesion_sample(source, overexposure, cfg, seed)?;
    let (x, y) = (&sample.x, &sample.y);
    let base = SvmParams::new(cfg.lesion.svm_c, Kernel::Linear);
    let seed_params = base.clone().with_costs(SEED_COSTS.0, SEED_COSTS.1);
    let potential_params = base.with_costs(POTENTIAL_COSTS.0, POTENTIAL_COSTS.1);
    let folds = cfg.train.folds;
    let seed_cv = cross_validate_svm(x, y, &seed_params, folds, seed)?;
    let potential_cv = cross_validate_svm(x, y, &potential_params, folds, seed)?;
    let seed_model = svm::train(x, y, &seed_params)?.model;
    let potential_model = svm::train(x, y, &potential_params)?.model;

    let seeds: Vec<&Vec<f64>> = x.iter().filter(|xi| seed_model.predict(xi).0 > 0).collect();
    let contained = seeds.iter().filter(|xi| potential_model.predict(xi).0 > 0).count();
    let containment = if seeds.is_empty() { 1.0 } else { contained as f64 / seeds.len() as f64 };
    if containment < 1.0 {
        log::warn!("seed SVM positives not contained in potential SVM positives: {containment:.4}");
    }

    let fisher_model = fisher::train(x, y)?.model;
    let fisher_correct = x.iter().zip(y).filter(|(xi, &yi)| fisher_model.predict(xi) == yi).count();
    let report = LesionReport {
        lesion_frames,
        normal_frames,
        pixels_per_class: x.len() / 2,
        seed_cv_accuracy: seed_cv.accuracy,
        potential_cv_accuracy: potential_cv.accuracy,
        seed_support: seed_model.n_support(),
        potential_support: potential_model.n_support(),
        containment,
        fisher_training_accuracy: fisher_correct as f64 / x.len() as f64,
    };
    log::info!(
        "lesion SVMs: CV accuracy {:.4} (seed), {:.4} (potential)",
        report.seed_cv_accuracy,
        report.potential_cv_accuracy
    );
    Ok((LesionModels { seed: seed_model, potential: potential_model, fisher: fisher_model }, report))
}

/// Frame features of one split. Frames without informative pixels have no
/// features; they are kept aside and count as uninformative.
#[derive(Debug, Clone, Default)]
pub struct FrameSet {
    pub indices: Vec<usize>,
    pub x: Vec<Vec<f64>>,
    /// `+1` informative, `−1` uninformative.
    pub y: Vec<i8>,
    /// `(index, truly informative)` of frames without features.
    pub excluded: Vec<(usize, bool)>,
}

fn label_sign(label: FrameLabel) -> i8 {
    if label == FrameLabel::Uninformative {
        -1
    } else {
        1
    }
}

/// Stage-1 and stage-2 features of every frame, split into train and test
/// sets.
pub fn frame_feature_sets(
    source: &dyn FrameSource,
    overexposure: &SvmModel,
    cfg: &Config,
) -> Result<(FrameSet, FrameSet), TrainError> {
    let metas = source.metas();
    let mut order: Vec<usize> = (0..metas.len()).collect();
    order.sort_by_key(|&k| metas[k].index);
    let feats: Vec<Result<Option<FeatureVector7>, TrainError>> = order
        .par_iter()
        .map(|&k| {
            let lf = source.load(k)?;
            let pre = match run_preprocess(&lf.frame, Some(overexposure), cfg) {
                Ok(p) => p,
                Err(e) if contained(&e) => return Ok(None),
                Err(e) => return Err(e.into()),
            };
            match frame_features(&pre, cfg) {
                Ok((f, _)) => Ok(Some(f)),
                Err(FeatureError::EmptyForeground | FeatureError::EmptyInformativeRegion) => Ok(None),
                Err(e) => Err(e.into()),
            }
        })
        .collect();
    let (mut train, mut test) = (FrameSet::default(), FrameSet::default());
    for (&k, f) in order.iter().zip(feats) {
        let meta = metas[k];
        let set = if meta.split == Split::Train { &mut train } else { &mut test };
        let y = label_sign(meta.label);
        match f? {
            Some(f) => {
                set.indices.push(meta.index);
                set.x.push(f.to_array().to_vec());
                set.y.push(y);
            }
            None => set.excluded.push((meta.index, y > 0)),
        }
    }
    Ok((train, test))
}

/// Accuracy over a whole split, frames without features counting as
/// predicted uninformative.
pub fn frame_accuracy(classifier: &FrameClassifier, set: &FrameSet) -> f64 {
    let total = set.x.len() + set.excluded.len();
    if total == 0 {
        return f64::NAN;
    }
    let hits = set
        .x
        .iter()
        .zip(&set.y)
        .filter(|(x, &y)| {
            let f = FeatureVector7::from_array([x[0], x[1], x[2], x[3], x[4], x[5], x[6]]);
            classifier.is_informative(&f) == (y > 0)
        })
        .count()
        + set.excluded.iter().filter(|(_, informative)| !informative).count();
    hits as f64 / total as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassifierSelection {
    pub mlp: bool,
    pub fisher: bool,
}

#[derive(Debug, Clone)]
pub struct FrameModels {
    pub boosted: BoostedTrees,
    pub mlp: Option<ShallowNet>,
    pub fisher: Option<FisherModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierReport {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameReport {
    pub train_frames: usize,
    pub test_frames: usize,
    /// Frames without informative pixels, left out of training.
    pub excluded_train: Vec<usize>,
    pub excluded_test: Vec<usize>,
    /// Held-out error of each fold's boosted model; the lowest is kept.
    pub boosted_fold_errors: Vec<f64>,
    pub boosted_fold: usize,
    pub boosted_operations: usize,
    pub boosted: ClassifierReport,
    pub mlp: Option<ClassifierReport>,
    pub mlp_epochs: Option<usize>,
    pub fisher: Option<ClassifierReport>,
}

/// Boosted trees from k-fold cross-validation: the fold model with the
/// lowest held-out error is kept (ties go to the earlier fold).
pub fn train_boosted_cv(
    train: &FrameSet,
    cfg: &Config,
    seed: u64,
) -> Result<(BoostedTrees, Vec<f64>, usize), TrainError> {
    let params = BoostParams { n_trees: cfg.train.boost_trees, max_splits: cfg.train.boost_splits };
    let folds = cfg.train.folds;
    let assignment = stratified_folds(&train.y, folds, seed);
    let fits: Vec<Result<(BoostedTrees, f64), TrainError>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (xtr, ytr, xte, yte) = split_fold(&train.x, &train.y, &assignment, f);
            let model = boost::train(&xtr, &ytr, &params)?.model;
            let wrong = xte.iter().zip(&yte).filter(|(x, &y)| model.predict(x).0 != y).count();
            Ok((model, wrong as f64 / xte.len().max(1) as f64))
        })
        .collect();
    let mut best: Option<(BoostedTrees, usize)> = None;
    let mut errors = Vec::with_capacity(folds);
    for (f, r) in fits.into_iter().enumerate() {
        let (model, err) = r?;
        if best.as_ref().is_none_or(|(_, b)| err < errors[*b]) {
            best = Some((model, f));
        }
        errors.push(err);
    }
    let (model, fold) = best.ok_or(TrainError::NotEnough { what: "folds", needed: 2, found: 0 })?;
    Ok((model, errors, fold))
}

pub fn train_frame_classifiers(
    train: &FrameSet,
    test: &FrameSet,
    cfg: &Config,
    seed: u64,
    which: ClassifierSelection,
) -> Result<(FrameModels, FrameReport), TrainError> {
    let t = &cfg.train;
    let (boosted, boosted_fold_errors, boosted_fold) = train_boosted_cv(train, cfg, seed)?;
    let report_for = |c: &FrameClassifier| ClassifierReport {
        train_accuracy: frame_accuracy(c, train),
        test_accuracy: frame_accuracy(c, test),
    };
    let boosted_clf = FrameClassifier::Boosted(boosted);
    let boosted_report = report_for(&boosted_clf);
    log::info!("boosted trees: test accuracy {:.4}", boosted_report.test_accuracy);

    let (mlp, mlp_report, mlp_epochs) = if which.mlp {
        let params = MlpParams {
            hidden: t.mlp_hidden,
            epochs: t.mlp_epochs,
            learning_rate: t.mlp_learning_rate,
            patience: t.mlp_patience,
            seed,
            ..MlpParams::default()
        };
        let fit = mlp::train(&train.x, &train.y, &params)?;
        let clf = FrameClassifier::Mlp(fit.model);
        let r = report_for(&clf);
        log::info!("shallow network: test accuracy {:.4} after {} epochs", r.test_accuracy, fit.epochs_run);
        let FrameClassifier::Mlp(model) = clf else { unreachable!() };
        (Some(model), Some(r), Some(fit.epochs_run))
    } else {
        (None, None, None)
    };
    let (fisher_model, fisher_report) = if which.fisher {
        let clf = FrameClassifier::Fisher(fisher::train(&train.x, &train.y)?.model);
        let r = report_for(&clf);
        let FrameClassifier::Fisher(model) = clf else { unreachable!() };
        (Some(model), Some(r))
    } else {
        (None, None)
    };
    let FrameClassifier::Boosted(boosted) = boosted_clf else { unreachable!() };
    let report = FrameReport {
        train_frames: train.x.len() + train.excluded.len(),
        test_frames: test.x.len() + test.excluded.len(),
        excluded_train: train.excluded.iter().map(|e| e.0).collect(),
        excluded_test: test.excluded.iter().map(|e| e.0).collect(),
        boosted_fold_errors,
        boosted_fold,
        boosted_operations: boosted.decision_operations(),
        boosted: boosted_report,
        mlp: mlp_report,
        mlp_epochs,
        fisher: fisher_report,
    };
    Ok((FrameModels { boosted, mlp, fisher: fisher_model }, report))
}

/// Every model `train` produces.
#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub overexposure: SvmModel,
    pub lesion: LesionModels,
    pub frame: FrameModels,
}

impl TrainedModels {
    /// Writes one file per model into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), TrainError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| IoError::Write { path: dir.to_path_buf(), reason: e.to_string() })?;
        write_model(&dir.join(OVEREXPOSURE_FILE), &self.overexposure)?;
        write_model(&dir.join(LESION_SEED_FILE), &self.lesion.seed)?;
        write_model(&dir.join(LESION_POTENTIAL_FILE), &self.lesion.potential)?;
        write_model(&dir.join(LESION_FISHER_FILE), &self.lesion.fisher)?;
        write_model(&dir.join(FRAME_BOOSTED_FILE), &self.frame.boosted)?;
        if let Some(m) = &self.frame.mlp {
            write_model(&dir.join(FRAME_MLP_FILE), m)?;
        }
        if let Some(m) = &self.frame.fisher {
            write_model(&dir.join(FRAME_FISHER_FILE), m)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub seed: u64,
    pub overexposure: OverexposureReport,
    pub lesion: LesionReport,
    pub frame: FrameReport,
}

impl TrainReport {
    /// TOML rendering; contains no timings, so it is reproducible.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# report unavailable: {e}\n"))
    }
}

/// Trains every model from one corpus.
pub fn train_all(
    source: &dyn FrameSource,
    cfg: &Config,
    seed: u64,
    which: ClassifierSelection,
) -> Result<(TrainedModels, TrainReport), TrainError> {
    let (overexposure, oreport) = train_overexposure(source, cfg, seed)?;
    let (lesion, lreport) = train_lesion(source, &overexposure, cfg, seed)?;
    let (train, test) = frame_feature_sets(source, &overexposure, cfg)?;
    let (frame, freport) = train_frame_classifiers(&train, &test, cfg, seed, which)?;
    Ok((
        TrainedModels { overexposure, lesion, frame },
        TrainReport { seed, overexposure: oreport, lesion: lreport, frame: freport },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reservoir_keeps_everything_below_capacity() {
        let mut r = Reservoir::new(10, stream_rng(1, 0));
        (0..7).for_each(|i| r.push(i));
        let mut got = r.into_shuffled();
        got.sort();
        assert_eq!(got, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn reservoir_is_roughly_uniform() {
        let mut hits = [0usize; 10];
        for s in 0..400 {
            let mut r = Reservoir::new(3, stream_rng(s, 0));
            (0..10).for_each(|i| r.push(i));
            r.into_shuffled().into_iter().for_each(|i| hits[i] += 1);
        }
        // Each item is kept with probability 0.3: 120 expected per item.
        assert!(hits.iter().all(|&h| (80..160).contains(&h)), "{hits:?}");
    }

    #[test]
    fn square_dilation_matches_brute_force() {
        let m = BinaryMask::from_fn(13, 9, |x, y| (x * 7 + y * 3) % 11 == 0).unwrap();
        for r in 0..3 {
            let fast = dilate_square(&m, r).unwrap();
            let slow = BinaryMask::from_fn(13, 9, |x, y| {
                m.indices().any(|i| {
                    let (px, py): (usize, usize) = (i % 13, i / 13);
                    px.abs_diff(x) <= r && py.abs_diff(y) <= r
                })
            })
            .unwrap();
            assert_eq!(fast, slow, "r = {r}");
        }
    }

    #[test]
    fn balanced_interleaves_and_truncates() {
        let (x, y) = balanced(vec![[1.0, 1.0]; 3], vec![[0.0, 0.0]; 5]);
        assert_eq!(x.len(), 6);
        assert_eq!(y, vec![1, -1, 1, -1, 1, -1]);
    }
}
