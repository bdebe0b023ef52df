use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::Instant;

use afb_core::config::{Config, ConfigError};
use afb_core::imaging::RgbFrame;
use afb_core::io::{load_frame, read_manifest, scan_frames, write_corpus, IoError, ManifestEntry, MANIFEST_NAME};
use afb_core::pipeline::{
    baselines_csv, profile_csv, read_baselines, read_verdicts, run_batch, timing_csv, verdicts_csv,
    AnalyzeOptions, BaselineRow, ClassifierKind, FrameVerdict, Models, PipelineError, VerdictRow,
};
use afb_core::preprocess::PreprocessError;
use afb_core::report::{match_by_index, metrics_csv, MethodMetrics, ReportError};
use afb_core::synth::{
    frame_classification_corpus, generate_corpus, lesion_sequence, FrameLabel, FrameSize, LesionShare,
};
use afb_core::training::{train_all, ClassifierSelection, ManifestSource, TrainError};
use thiserror::Error;

use crate::{AnalyzeArgs, BenchArgs, ClassifierArg, Common, CorpusKind, EvalArgs, SizeArg, SynthArgs, TrainArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    /// 1 input error, 2 model error, 3 invariant violation.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(e) => e.exit_code() as u8,
            CliError::Train(e) => match e {
                TrainError::Pipeline(p) => p.exit_code() as u8,
                TrainError::Ml(_) => 2,
                TrainError::Preprocess(PreprocessError::ModelMissing(_) | PreprocessError::ModelShape { .. }) => 2,
                TrainError::Imaging(_) | TrainError::Preprocess(PreprocessError::Imaging(_)) => 3,
                _ => 1,
            },
            _ => 1,
        }
    }
}

fn load_config(common: &Common) -> Result<Config, CliError> {
    match &common.config {
        Some(p) => Ok(Config::load(p)?),
        None => Ok(Config::default()),
    }
}

fn classifier_kind(c: ClassifierArg) -> ClassifierKind {
    match c {
        ClassifierArg::Boosted => ClassifierKind::Boosted,
        ClassifierArg::Mlp => ClassifierKind::Mlp,
        ClassifierArg::Fisher => ClassifierKind::Fisher,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| IoError::Write { path: path.to_path_buf(), reason: e.to_string() }.into())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| IoError::Write { path: dir.to_path_buf(), reason: e.to_string() }.into())
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    if a.count == 0 {
        return Err(CliError::Input("--count must be positive".into()));
    }
    let size = match a.size {
        SizeArg::Hd => FrameSize::Hd,
        SizeArg::Sd => FrameSize::Sd,
    };
    let entries = match a.corpus {
        CorpusKind::Mixed => generate_corpus(a.count, size, a.seed),
        CorpusKind::Frames => frame_classification_corpus(a.count, size, a.seed),
        CorpusKind::Sequence => lesion_sequence(a.count, LesionShare::Middle, size, a.seed),
        CorpusKind::AllLesion => lesion_sequence(a.count, LesionShare::All, size, a.seed),
    };
    let manifest = write_corpus(&a.out, &entries)?;
    println!("wrote {} frames and {}", entries.len(), manifest.display());
    Ok(())
}

pub fn train(a: &TrainArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.common)?;
    let source = ManifestSource::new(read_manifest(&a.frames)?);
    let (models, report) = train_all(&source, &cfg, a.seed, ClassifierSelection { mlp: true, fisher: true })?;
    models.save(&a.models)?;
    write_text(&a.models.join("train_report.toml"), &report.to_toml())?;
    println!(
        "overexposure SVM: {}-fold CV accuracy {:.4} ({} support vectors)",
        cfg.train.folds, report.overexposure.cv_accuracy, report.overexposure.n_support
    );
    println!(
        "lesion SVMs: CV accuracy {:.4} (seed), {:.4} (potential)",
        report.lesion.seed_cv_accuracy, report.lesion.potential_cv_accuracy
    );
    println!("boosted trees: test accuracy {:.4}", report.frame.boosted.test_accuracy);
    if let Some(r) = &report.frame.mlp {
        println!("shallow network: test accuracy {:.4}", r.test_accuracy);
    }
    if let Some(r) = &report.frame.fisher {
        println!("fisher discriminant: test accuracy {:.4}", r.test_accuracy);
    }
    println!("models written to {}", a.models.display());
    Ok(())
}

/// Frame-level metrics: informative-frame detection over all frames, then
/// lesion detection for the proposed method and both baselines over the
/// truly informative frames. Frames ruled uninformative count as no lesion.
pub fn evaluate(
    manifest: &[ManifestEntry],
    verdicts: &[VerdictRow],
    baselines: &[BaselineRow],
) -> Result<Vec<MethodMetrics>, CliError> {
    let stage1_truth: Vec<(usize, bool)> =
        manifest.iter().map(|e| (e.index, e.label != FrameLabel::Uninformative)).collect();
    let stage1_pred: Vec<(usize, bool)> = verdicts.iter().map(|v| (v.frame, v.stage1 == "informative")).collect();
    let mut rows = vec![MethodMetrics { method: "stage1".into(), confusion: match_by_index(&stage1_pred, &stage1_truth)? }];

    let informative: BTreeSet<usize> =
        manifest.iter().filter(|e| e.label != FrameLabel::Uninformative).map(|e| e.index).collect();
    let lesion_truth: Vec<(usize, bool)> = manifest
        .iter()
        .filter(|e| informative.contains(&e.index))
        .map(|e| (e.index, e.label == FrameLabel::InformativeLesion))
        .collect();
    let pick = |pairs: Vec<(usize, bool)>| -> Vec<(usize, bool)> {
        pairs.into_iter().filter(|(i, _)| informative.contains(i)).collect()
    };
    let proposed = pick(verdicts.iter().map(|v| (v.frame, v.stage2 == "lesion")).collect());
    rows.push(MethodMetrics { method: "proposed".into(), confusion: match_by_index(&proposed, &lesion_truth)? });
    let fisher = pick(baselines.iter().map(|b| (b.frame, b.fisher == "lesion")).collect());
    rows.push(MethodMetrics { method: "fisher".into(), confusion: match_by_index(&fisher, &lesion_truth)? });
    let rg = pick(baselines.iter().map(|b| (b.frame, b.rg == "lesion")).collect());
    rows.push(MethodMetrics { method: "rg".into(), confusion: match_by_index(&rg, &lesion_truth)? });
    Ok(rows)
}

fn verdict_rows(verdicts: &[FrameVerdict]) -> Vec<VerdictRow> {
    verdicts
        .iter()
        .map(|v| VerdictRow {
            frame: v.frame,
            stage1: v.stage1.name().into(),
            stage2: v.stage2.name().into(),
            likelihood: v.likelihood,
        })
        .collect()
}

fn baseline_rows(verdicts: &[FrameVerdict]) -> Vec<BaselineRow> {
    let word = |b: Option<bool>| match b {
        Some(true) => "lesion",
        Some(false) => "normal",
        None => "n/a",
    };
    verdicts
        .iter()
        .map(|v| BaselineRow {
            frame: v.frame,
            proposed: v.stage2.name().into(),
            fisher: word(v.baselines.and_then(|b| b.fisher_lesion)).into(),
            rg: word(v.baselines.map(|b| b.rg_lesion)).into(),
        })
        .collect()
}

fn print_metrics(rows: &[MethodMetrics]) {
    println!("{:<10} {:>9} {:>12} {:>12}", "method", "accuracy", "sensitivity", "specificity");
    for r in rows {
        let c = &r.confusion;
        println!("{:<10} {:>9.4} {:>12.4} {:>12.4}", r.method, c.accuracy(), c.sensitivity(), c.specificity());
    }
}

pub fn analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.common)?;
    let models = Models::load(&a.models, classifier_kind(a.classifier))?;
    let files = scan_frames(&a.frames)?;
    create_dir(&a.out)?;
    let overlay_dir = if a.no_overlays {
        None
    } else {
        let d = a.out.join("overlays");
        create_dir(&d)?;
        Some(d)
    };
    let opts = AnalyzeOptions { baselines: true, overlay_dir };
    let t = Instant::now();
    let verdicts = run_batch(
        files.len(),
        |k| Ok((files[k].index, load_frame(&files[k].path)?)),
        &models,
        &cfg,
        &opts,
        a.workers,
    )?;
    let wall = t.elapsed().as_secs_f64();
    write_text(&a.out.join("verdicts.csv"), &verdicts_csv(&verdicts, a.timing))?;
    write_text(&a.out.join("profile.csv"), &profile_csv(&verdicts))?;
    write_text(&a.out.join("baselines.csv"), &baselines_csv(&verdicts))?;
    if a.timing {
        write_text(&a.out.join("timing.csv"), &timing_csv(&verdicts))?;
    }
    let informative = verdicts.iter().filter(|v| v.stage2.name() != "n/a").count();
    let lesion = verdicts.iter().filter(|v| v.stage2.name() == "lesion").count();
    println!(
        "analyzed {} frames in {wall:.2} s: {informative} informative, {lesion} with lesions",
        verdicts.len()
    );
    if a.frames.join(MANIFEST_NAME).is_file() {
        let manifest = read_manifest(&a.frames)?;
        let rows = evaluate(&manifest, &verdict_rows(&verdicts), &baseline_rows(&verdicts))?;
        write_text(&a.out.join("metrics.csv"), &metrics_csv(&rows))?;
        print_metrics(&rows);
    }
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let manifest = read_manifest(&a.frames)?;
    let verdicts = read_verdicts(&a.out.join("verdicts.csv"))?;
    let baselines = read_baselines(&a.out.join("baselines.csv"))?;
    let rows = evaluate(&manifest, &verdicts, &baselines)?;
    write_text(&a.out.join("metrics.csv"), &metrics_csv(&rows))?;
    print_metrics(&rows);
    Ok(())
}

pub fn bench(a: &BenchArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.common)?;
    let models = Models::load(&a.models, classifier_kind(a.classifier))?;
    let files = scan_frames(&a.frames)?;
    if files.is_empty() {
        return Err(CliError::Input(format!("no frames in {}", a.frames.display())));
    }
    // Frames are held as 8-bit RGB so decoding stays out of the measurement.
    let mut frames = Vec::with_capacity(files.len());
    for f in &files {
        let frame = load_frame(&f.path)?;
        frames.push((f.index, frame.width(), frame.height(), frame.to_rgb8()));
    }
    let load = |k: usize| {
        let (index, w, h, rgb) = &frames[k];
        Ok((*index, RgbFrame::from_rgb8(*w, *h, rgb).map_err(IoError::from)?))
    };
    let opts = AnalyzeOptions::default();
    let time = |workers: usize| -> Result<(Vec<FrameVerdict>, f64), CliError> {
        let t = Instant::now();
        let v = run_batch(frames.len(), load, &models, &cfg, &opts, workers)?;
        Ok((v, t.elapsed().as_secs_f64()))
    };
    let (single, t1) = time(1)?;
    let (multi, tn) = time(a.workers)?;
    let n = frames.len() as f64;
    let same = verdicts_csv(&single, false) == verdicts_csv(&multi, false);
    let mean = |f: fn(&FrameVerdict) -> f64| single.iter().map(f).sum::<f64>() / n;
    let cores = std::thread::available_parallelism().map_or(1, |c| c.get());
    println!("frames: {}", frames.len());
    println!("cores available: {cores}");
    println!("workers=1: {t1:.3} s, {:.2} frames/s", n / t1);
    println!("workers={}: {tn:.3} s, {:.2} frames/s", a.workers, n / tn);
    println!("scaling: {:.2}x", t1 / tn);
    println!(
        "mean stage time (ms): preprocess {:.2}, classify {:.3}, lesion {:.2}",
        mean(|v| v.timing.preprocess),
        mean(|v| v.timing.classify),
        mean(|v| v.timing.lesion)
    );
    println!("identical verdicts: {same}");
    if !same {
        return Err(PipelineError::Invariant {
            frame: 0,
            detail: "verdicts differ between worker counts".into(),
        }
        .into());
    }
    Ok(())
}
