//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when a hard criterion fails. Criterion 12 is soft: its line
//! is printed but never fails the run.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use afb_core::config::Config;
use afb_core::features::frame_features;
use afb_core::imaging::{BinaryMask, GrayImage};
use afb_core::lesion::{box_decision, region_grow, region_grow_with, Traversal};
use afb_core::pipeline::{
    check_mask_algebra, run_batch, AnalyzeOptions, FrameClassifier, FrameVerdict, Models, PipelineError, Stage2,
};
use afb_core::preprocess::{entropy_raw, multi_otsu3, run_preprocess, window_entropy, PreprocessError};
use afb_core::report::Confusion;
use afb_core::synth::{
    frame_classification_corpus, generate_corpus, lesion_sequence, CorpusEntry, FrameSize, LesionShare, PhantomKind,
};
use afb_core::training::{train_all, train_overexposure, ClassifierSelection, SynthSource, TrainReport, TrainedModels};
use afb_ml::mlp::{ShallowNet, DEFAULT_INPUT_GAIN, DEFAULT_INPUT_OFFSET};
use afb_ml::svm::{self, Kernel, SvmParams};
use proptest::prelude::*;
use proptest::test_runner::{RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const CORPUS_SEED: u64 = 2024;
const TRAIN_SEED: u64 = 7;

struct Trained {
    models: TrainedModels,
    report: TrainReport,
    seconds: f64,
}

struct Fixture {
    tmp: tempfile::TempDir,
    trained: OnceLock<Result<Trained, String>>,
    cli_models: OnceLock<Result<PathBuf, String>>,
}

impl Fixture {
    /// Every model trained once on the 1000-frame corpus.
    fn trained(&self) -> Result<&Trained, String> {
        self.trained
            .get_or_init(|| {
                let source = SynthSource::new(frame_classification_corpus(500, FrameSize::Sd, CORPUS_SEED));
                let t = Instant::now();
                let which = ClassifierSelection { mlp: true, fisher: true };
                let (models, report) =
                    train_all(&source, &Config::default(), TRAIN_SEED, which).map_err(|e| e.to_string())?;
                Ok(Trained { models, report, seconds: t.elapsed().as_secs_f64() })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn models(&self) -> Result<Models, String> {
        let t = &self.trained()?.models;
        Ok(Models {
            overexposure: t.overexposure.clone(),
            lesion_seed: t.lesion.seed.clone(),
            lesion_potential: t.lesion.potential.clone(),
            lesion_fisher: Some(t.lesion.fisher.clone()),
            classifier: FrameClassifier::Boosted(t.frame.boosted.clone()),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.tmp.path().join(name)
    }

    /// Models written by `afb train` on a small corpus.
    fn cli_models(&self) -> Result<&Path, String> {
        self.cli_models
            .get_or_init(|| {
                let corpus = self.path("train_corpus");
                afb(&["synth", "--out", s(&corpus), "--corpus", "frames", "--count", "30", "--size", "sd", "--seed", "2"])?;
                let models = self.path("models_a");
                afb(&["train", "--frames", s(&corpus), "--models", s(&models), "--seed", "1"])?;
                Ok(models)
            })
            .as_ref()
            .map(PathBuf::as_path)
            .map_err(Clone::clone)
    }
}

fn s(p: &Path) -> &str {
    p.to_str().expect("temporary paths are UTF-8")
}

fn afb(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_afb")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!("afb {} exited with {:?}: {}", args[0], out.status.code(), String::from_utf8_lossy(&out.stderr)))
    }
}

fn analyze(entries: &[CorpusEntry], models: &Models) -> Result<Vec<FrameVerdict>, String> {
    let opts = AnalyzeOptions { baselines: true, overlay_dir: None };
    let load = |k: usize| Ok((entries[k].index, entries[k].render().expect("phantoms render").0));
    run_batch(entries.len(), load, models, &Config::default(), &opts, 1).map_err(|e| e.to_string())
}

// 1. Otsu ------------------------------------------------------------------

/// Brute-force three-class Otsu: histogram by edge comparison, between-class
/// variance `Σ w_c (μ_c − μ)²` over bin levels, first maximum wins.
fn otsu_oracle(data: &[f64], bins: usize) -> Option<(usize, usize)> {
    let min = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return None;
    }
    let edge = |k: usize| min + k as f64 * (max - min) / bins as f64;
    let mut hist = vec![0.0f64; bins];
    for &v in data {
        hist[(1..bins).filter(|&k| v >= edge(k)).count()] += 1.0;
    }
    if hist.iter().filter(|&&c| c > 0.0).count() < 3 {
        return None;
    }
    let n = data.len() as f64;
    let mut cum_w = vec![0.0; bins + 1];
    let mut cum_m = vec![0.0; bins + 1];
    for i in 0..bins {
        cum_w[i + 1] = cum_w[i] + hist[i] / n;
        cum_m[i + 1] = cum_m[i] + i as f64 * hist[i] / n;
    }
    let mu = cum_m[bins];
    let mut best: Option<(f64, usize, usize)> = None;
    for k1 in 1..bins - 1 {
        for k2 in k1 + 1..bins {
            let classes = [(0, k1), (k1, k2), (k2, bins)];
            if classes.iter().any(|&(lo, hi)| hist[lo..hi].iter().sum::<f64>() == 0.0) {
                continue;
            }
            let var: f64 = classes
                .iter()
                .map(|&(lo, hi)| {
                    let w = cum_w[hi] - cum_w[lo];
                    let m = (cum_m[hi] - cum_m[lo]) / w;
                    w * (m - mu) * (m - mu)
                })
                .sum();
            if best.is_none_or(|(b, _, _)| var > b) {
                best = Some((var, k1, k2));
            }
        }
    }
    best.map(|(_, k1, k2)| (k1, k2))
}

fn random_image(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let modes: Vec<(f64, f64)> = (0..3).map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.01..0.2))).collect();
    let uniform = rng.gen_bool(0.2);
    (0..64 * 64)
        .map(|_| {
            if uniform {
                return rng.gen_range(0.0..1.0);
            }
            let (c, w) = modes[rng.gen_range(0..3)];
            (c + w * (rng.gen_range(-1.0..1.0f64) + rng.gen_range(-1.0..1.0))).clamp(0.0, 1.0)
        })
        .collect()
}

fn otsu_oracle_equivalence(_: &Fixture) -> Outcome {
    let bins = Config::default().otsu.bins;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let images: Vec<GrayImage> =
        (0..50).map(|_| GrayImage::from_vec(64, 64, random_image(&mut rng)).expect("64×64 image")).collect();
    let t = Instant::now();
    let ours: Vec<_> = images.iter().map(|img| multi_otsu3(img, bins)).collect();
    let seconds = t.elapsed().as_secs_f64();
    for (k, (img, p)) in images.iter().zip(&ours).enumerate() {
        let want = otsu_oracle(img.data(), bins);
        let p = p.as_ref().map_err(|e| format!("image {k}: {e}"))?;
        ensure!(want == Some((p.k1, p.k2)), "image {k}: got ({}, {}), oracle {want:?}", p.k1, p.k2);
        let (min, max) = img.min_max();
        let edge = |k: usize| min + k as f64 * (max - min) / bins as f64;
        ensure!(p.t1 == edge(p.k1) && p.t2 == edge(p.k2), "image {k}: threshold values off their bin edges");
    }
    ensure!(seconds < 5.0, "50 images took {seconds:.2} s");
    Ok(format!("50 images, {bins} bins, all threshold pairs identical, {seconds:.3} s"))
}

// 2. Entropy ---------------------------------------------------------------

/// `1 − H / ln m` with `H` the natural-log entropy of the window's pdf.
fn entropy_oracle(values: &[f64], bins: usize) -> f64 {
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 1.0;
    }
    let mut counts = std::collections::BTreeMap::new();
    for &v in values {
        let b = (((v / max) * bins as f64).floor() as usize).min(bins - 1);
        *counts.entry(b).or_insert(0usize) += 1;
    }
    let n = values.len() as f64;
    let h: f64 = counts.values().map(|&c| -(c as f64 / n) * (c as f64 / n).ln()).sum();
    1.0 - h / (bins.min(values.len()) as f64).ln()
}

fn sobel_oracle(img: &GrayImage) -> Vec<f64> {
    let (w, h) = img.dims();
    let p = |x: isize, y: isize| img.get(x.clamp(0, w as isize - 1) as usize, y.clamp(0, h as isize - 1) as usize);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for (d, wgt) in [(-1, 1.0), (0, 2.0), (1, 1.0)] {
                gx += wgt * (p(x + 1, y + d) - p(x - 1, y + d));
                gy += wgt * (p(x + d, y + 1) - p(x + d, y - 1));
            }
            out.push(gx.hypot(gy));
        }
    }
    out
}

fn entropy_analytic_cases(_: &Fixture) -> Outcome {
    let cfg = Config::default().entropy;
    let bins = cfg.bins;
    let single = window_entropy(&[0.37; 25], bins);
    ensure!((single - 1.0).abs() <= 1e-9, "single-bin pdf gives {single}");
    let flat = entropy_raw(&GrayImage::new(16, 16, 0.4).expect("image"), &cfg).map_err(|e| e.to_string())?;
    ensure!(flat.data().iter().all(|&v| (v - 1.0).abs() <= 1e-9), "flat image is not 1 everywhere");
    let spread: Vec<f64> = (0..25).map(|k| (k as f64 + 0.5) / 25.0).collect();
    let uniform = window_entropy(&spread, bins);
    ensure!(uniform.abs() <= 1e-9, "25-distinct-bin pdf gives {uniform}");

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..8 {
        // Continuous values with a flat rectangle, so some windows see no
        // gradient at all and none sit exactly on a bin edge.
        let (x0, y0, side) = (rng.gen_range(0..20), rng.gen_range(0..20), rng.gen_range(6..12));
        let level = rng.gen_range(0.0..1.0);
        let values = (0..32 * 32)
            .map(|i| {
                let (x, y) = (i % 32, i / 32);
                let flat = (x0..x0 + side).contains(&x) && (y0..y0 + side).contains(&y);
                if flat { level } else { rng.gen_range(0.0..1.0) }
            })
            .collect();
        let img = GrayImage::from_vec(32, 32, values).expect("image");
        let ours = entropy_raw(&img, &cfg).map_err(|e| e.to_string())?;
        let mag = sobel_oracle(&img);
        let r = (cfg.window / 2) as isize;
        for y in 0..32isize {
            for x in 0..32isize {
                let mut window = Vec::with_capacity(cfg.window * cfg.window);
                for dy in -r..=r {
                    for dx in -r..=r {
                        window.push(mag[((y + dy).clamp(0, 31) * 32 + (x + dx).clamp(0, 31)) as usize]);
                    }
                }
                let d = (ours.get(x as usize, y as usize) - entropy_oracle(&window, bins)).abs();
                worst = worst.max(d);
                checked += 1;
            }
        }
    }
    ensure!(worst <= 1e-9, "random patches differ from the oracle by {worst:e}");
    Ok(format!("single bin {single}, 25 bins {uniform:.1e}, {checked} random patches within {worst:.1e}"))
}

// 3. Overexposure SVM ------------------------------------------------------

fn overexposure_svm(_: &Fixture) -> Outcome {
    let cfg = Config::default();
    let source = SynthSource::new(frame_classification_corpus(500, FrameSize::Sd, CORPUS_SEED));
    let t = Instant::now();
    let (_, report) = train_overexposure(&source, &cfg, TRAIN_SEED).map_err(|e| e.to_string())?;
    let seconds = t.elapsed().as_secs_f64();
    let pixels = 2 * report.pixels_per_class;
    ensure!(pixels == 8000, "balanced sample has {pixels} pixels");
    ensure!(report.cv_accuracy >= 0.95, "{}-fold CV accuracy {:.4}", cfg.train.folds, report.cv_accuracy);
    ensure!(seconds < 60.0, "took {seconds:.1} s");
    Ok(format!(
        "{}-fold CV accuracy {:.4} on {pixels} pixels (C={:.3}, gamma={:.3}), {seconds:.1} s",
        cfg.train.folds, report.cv_accuracy, report.c, report.gamma
    ))
}

// 4. Frame classification --------------------------------------------------

fn frame_classification(fx: &Fixture) -> Outcome {
    let t = fx.trained()?;
    let f = &t.report.frame;
    let boosted = f.boosted.test_accuracy;
    let mlp = f.mlp.as_ref().ok_or("network was not trained")?.test_accuracy;
    ensure!(boosted >= 0.95, "boosted test accuracy {boosted:.4}");
    ensure!(boosted - mlp <= 0.10, "network {mlp:.4} trails boosted {boosted:.4} by more than 10 points");
    ensure!(t.seconds < 600.0, "training took {:.0} s", t.seconds);
    Ok(format!(
        "{} train / {} test frames: boosted {boosted:.4}, network {mlp:.4}, fisher {:.4}; trained in {:.0} s",
        f.train_frames,
        f.test_frames,
        f.fisher.as_ref().map_or(f64::NAN, |r| r.test_accuracy),
        t.seconds
    ))
}

// 5. Lesion frames ---------------------------------------------------------

fn lesion_frames(fx: &Fixture) -> Outcome {
    let models = fx.models()?;
    let seq = lesion_sequence(400, LesionShare::Middle, FrameSize::Sd, 501);
    let verdicts = analyze(&seq, &models)?;
    let truth: Vec<bool> = seq.iter().map(|e| e.spec.kind == PhantomKind::Lesion).collect();
    let confusion = |pred: &dyn Fn(&FrameVerdict) -> bool| {
        Confusion::from_pairs(verdicts.iter().zip(&truth).map(|(v, &t)| (pred(v), t)))
    };
    let proposed = confusion(&|v| v.stage2 == Stage2::Lesion);
    let rg = confusion(&|v| v.baselines.is_some_and(|b| b.rg_lesion));
    let fisher = confusion(&|v| v.baselines.and_then(|b| b.fisher_lesion).unwrap_or(false));
    let (acc, sen, spe) = (proposed.accuracy(), proposed.sensitivity(), proposed.specificity());
    ensure!(acc >= 0.95 && sen >= 0.95 && spe >= 0.95, "accuracy {acc:.4}, sensitivity {sen:.4}, specificity {spe:.4}");
    ensure!(acc >= rg.accuracy(), "proposed {acc:.4} below R/G baseline {:.4}", rg.accuracy());

    let all = lesion_sequence(400, LesionShare::All, FrameSize::Sd, 502);
    let flagged = analyze(&all, &models)?.iter().filter(|v| v.stage2 == Stage2::Lesion).count();
    ensure!(flagged == all.len(), "{flagged} of {} all-lesion frames flagged", all.len());
    Ok(format!(
        "accuracy {acc:.4}, sensitivity {sen:.4}, specificity {spe:.4}; R/G {:.4}, fisher {:.4}; all-lesion {flagged}/400",
        rg.accuracy(),
        fisher.accuracy()
    ))
}

// 6. Region growing --------------------------------------------------------

const GW: usize = 24;
const GH: usize = 18;

/// Components of `allowed` (8-connected) that contain a seed, by flood fill
/// from every seed over an explicit stack.
fn grow_oracle(seeds: &[bool], potential: &[bool]) -> Vec<bool> {
    let allowed: Vec<bool> = seeds.iter().zip(potential).map(|(a, b)| *a || *b).collect();
    let mut out = vec![false; GW * GH];
    let mut stack: Vec<usize> = (0..GW * GH).filter(|&i| seeds[i]).collect();
    while let Some(i) = stack.pop() {
        if out[i] {
            continue;
        }
        out[i] = true;
        let (x, y) = ((i % GW) as isize, (i / GW) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if (0..GW as isize).contains(&nx) && (0..GH as isize).contains(&ny) {
                    let j = ny as usize * GW + nx as usize;
                    if allowed[j] && !out[j] {
                        stack.push(j);
                    }
                }
            }
        }
    }
    out
}

fn region_growing(_: &Fixture) -> Outcome {
    let config = ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let bits = |p: f64| prop::collection::vec(prop::bool::weighted(p), GW * GH);
    let strategy = (bits(0.03), bits(0.5), bits(0.04));
    let mask = |v: &[bool]| BinaryMask::from_vec(GW, GH, v.to_vec()).expect("mask dims");
    let fail = |m: &str| TestCaseError::fail(m.to_string());
    runner
        .run(&strategy, |(s, p, extra)| {
            let (seeds, potential) = (mask(&s), mask(&p));
            let bfs = region_grow_with(&seeds, &potential, Traversal::BreadthFirst).map_err(|e| fail(&e.to_string()))?;
            let dfs = region_grow_with(&seeds, &potential, Traversal::DepthFirst).map_err(|e| fail(&e.to_string()))?;
            if bfs != dfs {
                return Err(fail("breadth-first and depth-first growth differ"));
            }
            if bfs.bits() != &grow_oracle(&s, &p)[..] {
                return Err(fail("growth differs from the flood-fill oracle"));
            }
            let union = seeds.union(&potential).expect("dims");
            let core = seeds.intersection(&union).expect("dims");
            if !core.is_subset_of(&bfs).expect("dims") || !bfs.is_subset_of(&union).expect("dims") {
                return Err(fail("output outside [seeds, seeds ∪ potential]"));
            }
            let more = seeds.union(&mask(&extra)).expect("dims");
            let grown = region_grow(&more, &potential).map_err(|e| fail(&e.to_string()))?;
            if !bfs.is_subset_of(&grown).expect("dims") {
                return Err(fail("adding seeds shrank the output"));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("200 random seed/potential pairs: bounds, BFS = DFS = oracle, monotone in seeds".into())
}

// 7. Box rule --------------------------------------------------------------

fn box_rule(_: &Fixture) -> Outcome {
    let with = |count: usize| {
        let mut m = BinaryMask::empty(72, 72).expect("mask");
        for i in 0..count {
            m.set(36 + i % 36, 36 + i / 36, true);
        }
        box_decision(&m, 36)
    };
    let (below, above) = (with(648), with(649));
    ensure!(below.flagged.is_empty() && !below.is_lesion_frame, "648 pixels flagged the box");
    ensure!(above.flagged == vec![(1, 1)] && above.is_lesion_frame, "649 pixels flagged {:?}", above.flagged);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for (side, boxes) in [(720, 400), (360, 100)] {
        for _ in 0..5 {
            let p = rng.gen_range(0.3..0.7);
            let m = BinaryMask::from_vec(side, side, (0..side * side).map(|_| rng.gen_bool(p)).collect()).expect("mask");
            let d = box_decision(&m, 36);
            ensure!(d.grid.total_boxes() == boxes, "{side}px grid has {} boxes", d.grid.total_boxes());
            let mut flagged = 0;
            for r in 0..side / 36 {
                for c in 0..side / 36 {
                    let k = (r * 36..(r + 1) * 36)
                        .flat_map(|y| (c * 36..(c + 1) * 36).map(move |x| (x, y)))
                        .filter(|&(x, y)| m.get(x, y))
                        .count();
                    flagged += usize::from(k >= 649);
                }
            }
            ensure!(d.flagged.len() == flagged, "{} flagged boxes, brute force {flagged}", d.flagged.len());
            worst = worst.max((d.likelihood - flagged as f64 / boxes as f64).abs());
        }
    }
    ensure!(worst <= 1e-12, "likelihood off by {worst:e}");
    Ok(format!("648 not flagged, 649 flagged; 400 HD / 100 SD boxes; likelihood within {worst:.1e}"))
}

// 8. SVM solver ------------------------------------------------------------

const COST_PAIRS: [(f64, f64); 9] =
    [(1.0, 1.0), (6.0, 0.1), (1.0, 2.0), (0.1, 6.0), (2.0, 1.0), (0.5, 0.5), (3.0, 0.3), (0.2, 5.0), (10.0, 10.0)];

fn toy_problem(seed: u64) -> (Vec<Vec<f64>>, Vec<i8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..20)
        .map(|i| {
            let y: i8 = if i % 2 == 0 { 1 } else { -1 };
            let c = 0.6 * f64::from(y);
            (vec![c + rng.gen_range(-1.0..1.0), 0.5 * c + rng.gen_range(-1.0..1.0)], y)
        })
        .unzip()
}

fn quad(q: &[Vec<f64>], a: &[f64]) -> Vec<f64> {
    q.iter().map(|row| row.iter().zip(a).map(|(qij, aj)| qij * aj).sum()).collect()
}

fn objective(q: &[Vec<f64>], a: &[f64]) -> f64 {
    0.5 * quad(q, a).iter().zip(a).map(|(qa, ai)| qa * ai).sum::<f64>() - a.iter().sum::<f64>()
}

/// Projection onto `{yᵀa = 0, 0 ≤ a ≤ u}` by bisection on the multiplier.
fn project(v: &[f64], y: &[i8], u: &[f64]) -> Vec<f64> {
    let at = |l: f64| -> Vec<f64> {
        v.iter().zip(y).zip(u).map(|((vi, &yi), ui)| (vi - l * f64::from(yi)).clamp(0.0, *ui)).collect()
    };
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r: f64 = at(mid).iter().zip(y).map(|(a, &yi)| a * f64::from(yi)).sum();
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient on the dual.
fn qp_oracle(q: &[Vec<f64>], y: &[i8], u: &[f64]) -> Vec<f64> {
    let step = 1.0 / q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let (mut a, mut z, mut t) = (vec![0.0; q.len()], vec![0.0; q.len()], 1.0f64);
    for _ in 0..20_000 {
        let g = quad(q, &z);
        let next = project(&z.iter().zip(&g).map(|(zi, gi)| zi - step * (gi - 1.0)).collect::<Vec<_>>(), y, u);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next.iter().zip(&a).map(|(n, o)| n + (t - 1.0) / t_next * (n - o)).collect();
        a = next;
        t = t_next;
    }
    a
}

/// Largest pairwise KKT violation `max_up(−y∇f) − min_low(−y∇f)`.
fn kkt_residual(q: &[Vec<f64>], y: &[i8], u: &[f64], a: &[f64]) -> f64 {
    let g = quad(q, a);
    let (mut up, mut low) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..a.len() {
        let v = -f64::from(y[i]) * (g[i] - 1.0);
        let (below, above) = (a[i] < u[i] - 1e-12, a[i] > 1e-12);
        if (y[i] > 0 && below) || (y[i] < 0 && above) {
            up = up.max(v);
        }
        if (y[i] > 0 && above) || (y[i] < 0 && below) {
            low = low.min(v);
        }
    }
    (up - low).max(0.0)
}

fn svm_solver(_: &Fixture) -> Outcome {
    let (mut gap, mut kkt, mut solved) = (0.0f64, 0.0f64, 0);
    for (kernel, seeds) in [(Kernel::Linear, 0..2u64), (Kernel::Rbf { gamma: 0.7 }, 10..12)] {
        for seed in seeds {
            let (x, y) = toy_problem(seed);
            let q: Vec<Vec<f64>> = x
                .iter()
                .zip(&y)
                .map(|(a, &ya)| x.iter().zip(&y).map(|(b, &yb)| f64::from(ya * yb) * kernel.eval(a, b)).collect())
                .collect();
            for (fp, fn_) in COST_PAIRS {
                let fit = svm::train(&x, &y, &SvmParams::new(1.0, kernel).with_costs(fp, fn_)).map_err(|e| e.to_string())?;
                let u: Vec<f64> = y.iter().map(|&l| if l > 0 { fn_ } else { fp }).collect();
                let d = (objective(&q, &fit.alphas) - objective(&q, &qp_oracle(&q, &y, &u))).abs();
                let r = kkt_residual(&q, &y, &u, &fit.alphas);
                ensure!(d <= 1e-3, "{kernel:?} seed {seed} costs ({fp}, {fn_}): objective gap {d:e}");
                ensure!(r <= 1e-3, "{kernel:?} seed {seed} costs ({fp}, {fn_}): KKT residual {r:e}");
                gap = gap.max(d);
                kkt = kkt.max(r);
                solved += 1;
            }
        }
    }
    Ok(format!("{solved} problems over 9 cost pairs: objective gap ≤ {gap:.1e}, KKT residual ≤ {kkt:.1e}"))
}

// 9. MLP gradients ---------------------------------------------------------

fn mlp_gradient(_: &Fixture) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x: Vec<Vec<f64>> = (0..30).map(|_| (0..7).map(|_| rng.gen_range(0.0..0.4)).collect()).collect();
    let y: Vec<i8> = x.iter().map(|r| if r[0] + r[3] > 0.4 { 1 } else { -1 }).collect();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (hidden, seed) in [(Config::default().train.mlp_hidden, 1), (8, 2)] {
        let mut net = ShallowNet::new(DEFAULT_INPUT_GAIN.to_vec(), DEFAULT_INPUT_OFFSET.to_vec(), hidden, seed)
            .map_err(|e| e.to_string())?;
        let (_, grad) = net.loss_and_grad(&x, &y);
        let base = net.parameters();
        // Fourth-order central stencil: a larger step keeps round-off out of
        // the smallest gradient components.
        let h = 1e-3;
        for k in 0..base.len() {
            let mut at = |d: f64| {
                let mut p = base.clone();
                p[k] += d;
                net.set_parameters(&p);
                net.loss(&x, &y)
            };
            let numeric = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
            let rel = (numeric - grad[k]).abs() / numeric.abs().max(grad[k].abs()).max(1e-6);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    ensure!(worst <= 1e-4, "worst relative error {worst:e}");
    Ok(format!("{checked} parameters, worst relative error {worst:.1e}"))
}

// 10. Determinism ----------------------------------------------------------

fn files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let p = e.map_err(|e| e.to_string())?.path();
        if p.is_file() {
            out.push((p.file_name().unwrap_or_default().to_string_lossy().into_owned(), fs::read(&p).map_err(|e| e.to_string())?));
        }
    }
    out.sort();
    Ok(out)
}

fn determinism(fx: &Fixture) -> Outcome {
    let a = fx.cli_models()?;
    let b = fx.path("models_b");
    afb(&["train", "--frames", s(&fx.path("train_corpus")), "--models", s(&b), "--seed", "1"])?;
    let (fa, fb) = (files(a)?, files(&b)?);
    ensure!(fa == fb, "model directories differ between identical training runs");

    let frames = fx.path("analyze_corpus");
    afb(&["synth", "--out", s(&frames), "--corpus", "mixed", "--count", "4", "--size", "sd", "--seed", "5"])?;
    let mut reports = Vec::new();
    for (name, workers) in [("run1", "1"), ("run2", "1"), ("run8", "8")] {
        let out = fx.path(name);
        afb(&["analyze", "--frames", s(&frames), "--models", s(a), "--out", s(&out), "--workers", workers])?;
        reports.push(files(&out)?);
    }
    ensure!(reports[0] == reports[1], "two identical analyze runs differ");
    ensure!(reports[0] == reports[2], "--workers 1 and --workers 8 differ");
    let names: Vec<&str> = reports[0].iter().map(|(n, _)| n.as_str()).collect();
    Ok(format!("{} model files and reports {names:?} byte-identical", fa.len()))
}

// 11. Mask algebra ---------------------------------------------------------

fn mask_algebra(fx: &Fixture) -> Outcome {
    let models = fx.models()?;
    let cfg = Config::default();
    let corpus = generate_corpus(8, FrameSize::Sd, 1101);
    // The pipeline asserts the algebra on every frame and fails the batch
    // otherwise.
    analyze(&corpus, &models)?;
    let mut checked = 0;
    for e in &corpus {
        let (frame, _) = e.render().map_err(|e| e.to_string())?;
        let pre = match run_preprocess(&frame, Some(&models.overexposure), &cfg) {
            Ok(p) => p,
            Err(PreprocessError::DegenerateHistogram { .. } | PreprocessError::InitDegenerate) => continue,
            Err(err) => return Err(format!("frame {}: {err}", e.index)),
        };
        let (f, o) = (pre.m_fore.bits(), pre.m_over.bits());
        ensure!(o.iter().zip(f).all(|(&o, &f)| !o || f), "frame {}: M_over ⊄ M_fore", e.index);
        if let Ok((features, m_inf)) = frame_features(&pre, &cfg) {
            let i = m_inf.bits();
            ensure!((0..f.len()).all(|k| i[k] == (f[k] && !o[k])), "frame {}: M_inf ≠ M_fore \\ M_over", e.index);
            let eta = o.iter().filter(|&&b| b).count() as f64 / f.iter().filter(|&&b| b).count() as f64;
            ensure!((0.0..=1.0).contains(&features.eta), "frame {}: eta {}", e.index, features.eta);
            ensure!((features.eta - eta).abs() < 1e-12, "frame {}: eta {} vs {eta}", e.index, features.eta);
        }
        checked += 1;
    }
    let fore = BinaryMask::from_fn(8, 8, |x, _| x < 4).expect("mask");
    let over = BinaryMask::from_fn(8, 8, |x, _| x > 5).expect("mask");
    let inf = fore.difference(&over).expect("mask");
    let err = check_mask_algebra(0, &fore, &over, &inf, 0.0).err().ok_or("violation went unnoticed")?;
    ensure!(matches!(err, PipelineError::Invariant { .. }) && err.exit_code() == 3, "violation maps to exit {}", err.exit_code());
    Ok(format!("{} frames analyzed, {checked} rechecked independently; violation exits with code 3", corpus.len()))
}

// 12. Throughput -----------------------------------------------------------

fn throughput(fx: &Fixture) -> Outcome {
    let models = fx.cli_models()?;
    let frames = fx.path("bench_corpus");
    afb(&["synth", "--out", s(&frames), "--corpus", "sequence", "--count", "40", "--size", "sd", "--seed", "12"])?;
    let out = afb(&["bench", "--frames", s(&frames), "--models", s(models), "--workers", "8"])?;
    let field = |prefix: &str, unit: &str| -> Option<f64> {
        let line = out.lines().find(|l| l.starts_with(prefix))?;
        let end = line.find(unit)?;
        line[..end].rsplit([' ', ',']).find(|t| !t.is_empty())?.parse().ok()
    };
    let fps = field("workers=1:", " frames/s").ok_or("no single-worker rate in bench output")?;
    let scaling = field("scaling:", "x").ok_or("no scaling in bench output")?;
    let cores = std::thread::available_parallelism().map_or(1, |c| c.get());
    let summary = format!("{fps:.1} SD frames/s on one worker, {scaling:.2}x with 8 workers on {cores} core(s)");
    ensure!(fps >= 5.0 && scaling >= 3.0, "{summary}");
    Ok(summary)
}

// --------------------------------------------------------------------------

struct Criterion {
    name: &'static str,
    soft: bool,
    run: fn(&Fixture) -> Outcome,
}

const CRITERIA: [Criterion; 12] = [
    Criterion { name: "otsu oracle equivalence", soft: false, run: otsu_oracle_equivalence },
    Criterion { name: "entropy analytic cases", soft: false, run: entropy_analytic_cases },
    Criterion { name: "overexposure svm", soft: false, run: overexposure_svm },
    Criterion { name: "frame classification", soft: false, run: frame_classification },
    Criterion { name: "lesion frame analysis", soft: false, run: lesion_frames },
    Criterion { name: "region growing properties", soft: false, run: region_growing },
    Criterion { name: "box rule boundary", soft: false, run: box_rule },
    Criterion { name: "svm solver correctness", soft: false, run: svm_solver },
    Criterion { name: "mlp gradient check", soft: false, run: mlp_gradient },
    Criterion { name: "determinism", soft: false, run: determinism },
    Criterion { name: "mask algebra", soft: false, run: mask_algebra },
    Criterion { name: "throughput", soft: true, run: throughput },
];

fn main() {
    // `cargo test -- --list` and filters come through as arguments.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let fx = Fixture {
        tmp: tempfile::tempdir().expect("temporary directory"),
        trained: OnceLock::new(),
        cli_models: OnceLock::new(),
    };
    let mut hard_failures = 0;
    let mut ran = 0;
    for (k, c) in CRITERIA.iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| (c.run)(&fx))).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        let tag = if c.soft { " (soft)" } else { "" };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {}{tag}: {detail} [{secs:.1} s]", k + 1, c.name),
            Err(why) => {
                println!("FAIL {:>2} {}{tag}: {why} [{secs:.1} s]", k + 1, c.name);
                if !c.soft {
                    hard_failures += 1;
                }
            }
        }
    }
    println!("acceptance: {ran} criteria run, {hard_failures} hard failure(s)");
    if hard_failures > 0 {
        std::process::exit(1);
    }
}
