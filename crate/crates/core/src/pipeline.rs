//! Frame-by-frame orchestration of the three stages, model files and the
//! per-frame CSV reports.
//!
//! Frames are independent: a batch runs on a fixed-size worker pool over
//! shared read-only models, and results come back in input order whatever
//! the completion order, so any worker count yields the same report.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use afb_ml::boost::BoostedTrees;
use afb_ml::codec::ModelCodec;
use afb_ml::fisher::FisherModel;
use afb_ml::mlp::ShallowNet;
use afb_ml::svm::SvmModel;
use afb_ml::MlError;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::config::Config;
use crate::features::{frame_features, FeatureError, FeatureVector7};
use crate::imaging::{BinaryMask, RgbFrame};
use crate::io::{save_rgb8, IoError};
use crate::lesion::{
    analyze_frame, box_decision, fisher_baseline, render_overlay, rg_threshold_baseline, LesionError, LesionResult,
};
use crate::preprocess::{run_preprocess, PreprocessError};

pub const OVEREXPOSURE_FILE: &str = "overexposure.svm";
pub const LESION_SEED_FILE: &str = "lesion_seed.svm";
pub const LESION_POTENTIAL_FILE: &str = "lesion_potential.svm";
pub const LESION_FISHER_FILE: &str = "lesion_fisher.fld";
pub const FRAME_BOOSTED_FILE: &str = "frame_boosted.abt";
pub const FRAME_MLP_FILE: &str = "frame_mlp.mlp";
pub const FRAME_FISHER_FILE: &str = "frame_fisher.fld";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Lesion(#[from] LesionError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("model file missing: {0}")]
    ModelMissing(PathBuf),
    #[error("{path}: {source}")]
    ModelFormat { path: PathBuf, source: MlError },
    #[error("frame {frame}: invariant violated: {detail}")]
    Invariant { frame: usize, detail: String },
    #[error("cannot start worker pool: {0}")]
    WorkerPool(String),
}

impl PipelineError {
    /// Process exit code: 1 input error, 2 model error, 3 invariant
    /// violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::ModelMissing(_) | PipelineError::ModelFormat { .. } => 2,
            PipelineError::Preprocess(PreprocessError::ModelMissing(_) | PreprocessError::ModelShape { .. }) => 2,
            PipelineError::Lesion(LesionError::ModelMissing(_) | LesionError::ModelShape { .. }) => 2,
            PipelineError::Invariant { .. } => 3,
            PipelineError::Preprocess(PreprocessError::Imaging(_))
            | PipelineError::Feature(FeatureError::Imaging(_))
            | PipelineError::Lesion(LesionError::Imaging(_)) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Boosted,
    Mlp,
    Fisher,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Boosted => "boosted",
            ClassifierKind::Mlp => "mlp",
            ClassifierKind::Fisher => "fisher",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            ClassifierKind::Boosted => FRAME_BOOSTED_FILE,
            ClassifierKind::Mlp => FRAME_MLP_FILE,
            ClassifierKind::Fisher => FRAME_FISHER_FILE,
        }
    }
}

/// Informative (+1) versus uninformative (−1) frame classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameClassifier {
    Boosted(BoostedTrees),
    Mlp(ShallowNet),
    Fisher(FisherModel),
}

impl FrameClassifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            FrameClassifier::Boosted(_) => ClassifierKind::Boosted,
            FrameClassifier::Mlp(_) => ClassifierKind::Mlp,
            FrameClassifier::Fisher(_) => ClassifierKind::Fisher,
        }
    }

    pub fn is_informative(&self, f: &FeatureVector7) -> bool {
        let x = f.to_array();
        let label = match self {
            FrameClassifier::Boosted(m) => m.predict(&x).0,
            FrameClassifier::Mlp(m) => m.predict(&x).0,
            FrameClassifier::Fisher(m) => m.predict(&x),
        };
        label > 0
    }
}

/// Everything `analyze` needs.
#[derive(Debug, Clone)]
pub struct Models {
    pub overexposure: SvmModel,
    pub lesion_seed: SvmModel,
    pub lesion_potential: SvmModel,
    /// Pixel baseline; optional at analysis time.
    pub lesion_fisher: Option<FisherModel>,
    pub classifier: FrameClassifier,
}

fn read_model<M: ModelCodec>(path: &Path) -> Result<M, PipelineError> {
    let bytes = fs::read(path).map_err(|_| PipelineError::ModelMissing(path.to_path_buf()))?;
    M::decode(&bytes).map_err(|source| PipelineError::ModelFormat { path: path.to_path_buf(), source })
}

pub fn write_model<M: ModelCodec>(path: &Path, model: &M) -> Result<(), PipelineError> {
    fs::write(path, model.encode())
        .map_err(|e| IoError::Write { path: path.to_path_buf(), reason: e.to_string() }.into())
}

impl Models {
    pub fn load(dir: &Path, kind: ClassifierKind) -> Result<Self, PipelineError> {
        let classifier_path = dir.join(kind.file_name());
        let classifier = match kind {
            ClassifierKind::Boosted => FrameClassifier::Boosted(read_model(&classifier_path)?),
            ClassifierKind::Mlp => FrameClassifier::Mlp(read_model(&classifier_path)?),
            ClassifierKind::Fisher => FrameClassifier::Fisher(read_model(&classifier_path)?),
        };
        let fisher_path = dir.join(LESION_FISHER_FILE);
        let lesion_fisher = if fisher_path.exists() { Some(read_model(&fisher_path)?) } else { None };
        Ok(Self {
            overexposure: read_model(&dir.join(OVEREXPOSURE_FILE))?,
            lesion_seed: read_model(&dir.join(LESION_SEED_FILE))?,
            lesion_potential: read_model(&dir.join(LESION_POTENTIAL_FILE))?,
            lesion_fisher,
            classifier,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage1 {
    Informative,
    Uninformative,
}

impl Stage1 {
    pub fn name(self) -> &'static str {
        match self {
            Stage1::Informative => "informative",
            Stage1::Uninformative => "uninformative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage2 {
    Normal,
    Lesion,
    NotApplicable,
}

impl Stage2 {
    pub fn name(self) -> &'static str {
        match self {
            Stage2::Normal => "normal",
            Stage2::Lesion => "lesion",
            Stage2::NotApplicable => "n/a",
        }
    }
}

/// Wall time per stage, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTiming {
    pub preprocess: f64,
    pub classify: f64,
    pub lesion: f64,
}

/// Frame-level decisions of the two pixel baselines, on the same box rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineVerdicts {
    pub rg_lesion: bool,
    pub fisher_lesion: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameVerdict {
    pub frame: usize,
    pub stage1: Stage1,
    pub stage2: Stage2,
    /// Zero unless `stage2` is `Lesion`.
    pub likelihood: f64,
    pub features: Option<FeatureVector7>,
    pub flagged_boxes: usize,
    pub timing: StageTiming,
    pub baselines: Option<BaselineVerdicts>,
    /// Why the frame was ruled uninformative before classification, if it was.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeOptions {
    /// Also run the R/G and Fisher pixel baselines on informative frames.
    pub baselines: bool,
    /// Write an overlay PNG for every lesion frame into this directory.
    pub overlay_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct FrameOutcome {
    pub verdict: FrameVerdict,
    pub lesion: Option<LesionResult>,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn uninformative(frame: usize, features: Option<FeatureVector7>, timing: StageTiming, note: Option<String>) -> FrameOutcome {
    FrameOutcome {
        verdict: FrameVerdict {
            frame,
            stage1: Stage1::Uninformative,
            stage2: Stage2::NotApplicable,
            likelihood: 0.0,
            features,
            flagged_boxes: 0,
            timing,
            baselines: None,
            note,
        },
        lesion: None,
    }
}

fn check(frame: usize, ok: bool, detail: impl FnOnce() -> String) -> Result<(), PipelineError> {
    if ok {
        Ok(())
    } else {
        Err(PipelineError::Invariant { frame, detail: detail() })
    }
}

/// Mask algebra every analyzed frame must satisfy: `M_over ⊆ M_fore`,
/// `M_inf = M_fore \ M_over` and `eta ∈ [0, 1]`.
pub fn check_mask_algebra(
    frame: usize,
    m_fore: &BinaryMask,
    m_over: &BinaryMask,
    m_inf: &BinaryMask,
    eta: f64,
) -> Result<(), PipelineError> {
    let (f, o, i) = (m_fore.bits(), m_over.bits(), m_inf.bits());
    check(frame, o.iter().zip(f).all(|(&o, &f)| !o || f), || "M_over is not a subset of M_fore".into())?;
    check(frame, (0..f.len()).all(|k| i[k] == (f[k] && !o[k])), || "M_inf differs from M_fore \\ M_over".into())?;
    check(frame, (0.0..=1.0).contains(&eta), || format!("eta = {eta} outside [0, 1]"))
}

/// Runs all three stages on one frame. Frames whose content defeats stage 1
/// or 2 (no usable histogram, no informative pixels) are ruled
/// uninformative instead of failing the batch.
pub fn process_frame(
    index: usize,
    frame: &RgbFrame,
    models: &Models,
    cfg: &Config,
    opts: &AnalyzeOptions,
) -> Result<FrameOutcome, PipelineError> {
    let mut timing = StageTiming::default();
    let t = Instant::now();
    let pre = match run_preprocess(frame, Some(&models.overexposure), cfg) {
        Ok(p) => p,
        Err(e @ (PreprocessError::DegenerateHistogram { .. } | PreprocessError::InitDegenerate)) => {
            timing.preprocess = ms_since(t);
            log::debug!("frame {index}: {e}; ruled uninformative");
            return Ok(uninformative(index, None, timing, Some(e.to_string())));
        }
        Err(e) => return Err(e.into()),
    };
    let features = match frame_features(&pre, cfg) {
        Ok(f) => Some(f),
        Err(FeatureError::EmptyInformativeRegion | FeatureError::EmptyForeground) => None,
        Err(e) => return Err(e.into()),
    };
    if let Some((f, m_inf)) = &features {
        check_mask_algebra(index, &pre.m_fore, &pre.m_over, m_inf, f.eta)?;
    } else {
        let m_inf = pre.m_fore.difference(&pre.m_over).map_err(PreprocessError::from)?;
        check_mask_algebra(index, &pre.m_fore, &pre.m_over, &m_inf, 0.0)?;
    }
    timing.preprocess = ms_since(t);

    let Some((features, m_inf)) = features else {
        return Ok(uninformative(index, None, timing, Some("no informative pixels".into())));
    };
    let t = Instant::now();
    let informative = models.classifier.is_informative(&features);
    timing.classify = ms_since(t);
    if !informative {
        return Ok(uninformative(index, Some(features), timing, None));
    }

    let t = Instant::now();
    let lesion = analyze_frame(
        frame,
        &m_inf,
        Some(&models.lesion_seed),
        Some(&models.lesion_potential),
        cfg.lesion.box_size,
    )?;
    let likelihood = lesion.likelihood();
    check(index, (0.0..=1.0).contains(&likelihood), || format!("likelihood {likelihood} outside [0, 1]"))?;
    check(index, lesion.is_lesion_frame() == (likelihood > 0.0), || "lesion flag disagrees with likelihood".into())?;
    let baselines = if opts.baselines {
        let m_full = m_inf.resize_nearest(frame.width(), frame.height()).map_err(LesionError::from)?;
        let rg = rg_threshold_baseline(frame, &m_full, cfg.lesion.rg_threshold)?;
        let fisher_lesion = match &models.lesion_fisher {
            Some(m) => Some(box_decision(&fisher_baseline(frame, &m_full, m)?, cfg.lesion.box_size).is_lesion_frame),
            None => None,
        };
        Some(BaselineVerdicts { rg_lesion: box_decision(&rg, cfg.lesion.box_size).is_lesion_frame, fisher_lesion })
    } else {
        None
    };
    timing.lesion = ms_since(t);

    let is_lesion = lesion.is_lesion_frame();
    Ok(FrameOutcome {
        verdict: FrameVerdict {
            frame: index,
            stage1: Stage1::Informative,
            stage2: if is_lesion { Stage2::Lesion } else { Stage2::Normal },
            likelihood: if is_lesion { likelihood } else { 0.0 },
            features: Some(features),
            flagged_boxes: lesion.decision.flagged.len(),
            timing,
            baselines,
            note: None,
        },
        lesion: Some(lesion),
    })
}

/// Loads and analyzes `count` frames on `workers` threads. `load(k)` returns
/// the frame index and pixels of the `k`-th frame. Verdicts come back in `k`
/// order.
pub fn run_batch<L>(
    count: usize,
    load: L,
    models: &Models,
    cfg: &Config,
    opts: &AnalyzeOptions,
    workers: usize,
) -> Result<Vec<FrameVerdict>, PipelineError>
where
    L: Fn(usize) -> Result<(usize, RgbFrame), PipelineError> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PipelineError::WorkerPool(e.to_string()))?;
    pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|k| {
                let (index, frame) = load(k)?;
                let out = process_frame(index, &frame, models, cfg, opts)?;
                if let (Some(dir), Some(lesion)) = (&opts.overlay_dir, &out.lesion) {
                    if lesion.is_lesion_frame() {
                        let path = dir.join(format!("overlay_{index:05}.png"));
                        save_rgb8(&path, frame.width(), frame.height(), render_overlay(&frame, lesion))?;
                    }
                }
                Ok(out.verdict)
            })
            .collect()
    })
}

pub const VERDICT_HEADER: &str =
    "frame,stage1,stage2,likelihood,alpha,beta,gamma,rho,epsilon,zeta,eta,ms_pre,ms_cls,ms_les";

/// Per-frame CSV. Timing columns are left empty unless `with_timing`, so
/// repeated runs produce identical files.
pub fn verdicts_csv(verdicts: &[FrameVerdict], with_timing: bool) -> String {
    let mut out = String::from(VERDICT_HEADER);
    out.push('\n');
    for v in verdicts {
        let feats = match &v.features {
            Some(f) => f.to_array().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            None => ",,,,,,".to_string(),
        };
        let timing = if with_timing {
            format!("{:.3},{:.3},{:.3}", v.timing.preprocess, v.timing.classify, v.timing.lesion)
        } else {
            ",,".to_string()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            v.frame,
            v.stage1.name(),
            v.stage2.name(),
            v.likelihood,
            feats,
            timing
        ));
    }
    out
}

fn lesion_word(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "lesion",
        Some(false) => "normal",
        None => "n/a",
    }
}

/// Frame-level lesion calls of the proposed method and both baselines.
/// Uninformative frames read `n/a` in every column.
pub fn baselines_csv(verdicts: &[FrameVerdict]) -> String {
    let mut out = String::from("frame,proposed,fisher,rg\n");
    for v in verdicts {
        let proposed = match v.stage2 {
            Stage2::NotApplicable => None,
            s => Some(s == Stage2::Lesion),
        };
        let (fisher, rg) = match &v.baselines {
            Some(b) => (b.fisher_lesion, Some(b.rg_lesion)),
            None => (None, None),
        };
        out.push_str(&format!("{},{},{},{}\n", v.frame, lesion_word(proposed), lesion_word(fisher), lesion_word(rg)));
    }
    out
}

/// Lesion likelihood per frame, ready to plot.
pub fn profile_csv(verdicts: &[FrameVerdict]) -> String {
    let mut out = String::from("frame,likelihood\n");
    for v in verdicts {
        out.push_str(&format!("{},{}\n", v.frame, v.likelihood));
    }
    out
}

pub fn timing_csv(verdicts: &[FrameVerdict]) -> String {
    let mut out = String::from("frame,ms_pre,ms_cls,ms_les,ms_total\n");
    for v in verdicts {
        let t = v.timing;
        out.push_str(&format!(
            "{},{:.3},{:.3},{:.3},{:.3}\n",
            v.frame,
            t.preprocess,
            t.classify,
            t.lesion,
            t.preprocess + t.classify + t.lesion
        ));
    }
    out
}

/// The columns of `verdicts.csv` needed for evaluation.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct VerdictRow {
    pub frame: usize,
    pub stage1: String,
    pub stage2: String,
    pub likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct BaselineRow {
    pub frame: usize,
    pub proposed: String,
    pub fisher: String,
    pub rg: String,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, IoError> {
    let bad = |e: csv::Error| IoError::UnreadableFile { file: path.to_path_buf(), reason: e.to_string() };
    let mut r = csv::Reader::from_path(path).map_err(bad)?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(bad)
}

pub fn read_verdicts(path: &Path) -> Result<Vec<VerdictRow>, IoError> {
    read_rows(path)
}

pub fn read_baselines(path: &Path) -> Result<Vec<BaselineRow>, IoError> {
    read_rows(path)
}
