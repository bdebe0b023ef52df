//! Frame and mask files, directory ingestion and the corpus manifest.
//!
//! Frames are numbered 8-bit RGB PNG files (`frame_00012.png`; the index is
//! the last run of digits in the file stem). Masks are 8-bit grayscale PNGs
//! where any nonzero value is set.

use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage as Luma8, ImageReader, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{BinaryMask, ImagingError, RgbFrame};
use crate::synth::{CorpusEntry, FrameLabel, PhantomKind, Split};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("directory not found: {0}")]
    MissingDir(PathBuf),
    #[error("{file}: frame is {width}×{height}; expected a square 720×720 or 360×360 frame")]
    BadDimensions { file: PathBuf, width: u32, height: u32 },
    #[error("{file}: frame is {found}×{found} but earlier frames are {expected}×{expected}")]
    MixedSizes { file: PathBuf, expected: u32, found: u32 },
    #[error("{file}: cannot read image: {reason}")]
    UnreadableFile { file: PathBuf, reason: String },
    #[error("{path}: cannot write: {reason}")]
    Write { path: PathBuf, reason: String },
    #[error("manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

fn unreadable(file: &Path, e: impl ToString) -> IoError {
    IoError::UnreadableFile { file: file.to_path_buf(), reason: e.to_string() }
}

fn write_err(path: &Path, e: impl ToString) -> IoError {
    IoError::Write { path: path.to_path_buf(), reason: e.to_string() }
}

pub fn load_frame(path: &Path) -> Result<RgbFrame, IoError> {
    let img = ImageReader::open(path)
        .map_err(|e| unreadable(path, e))?
        .decode()
        .map_err(|e| unreadable(path, e))?
        .into_rgb8();
    let (w, h) = img.dimensions();
    Ok(RgbFrame::from_rgb8(w as usize, h as usize, img.as_raw())?)
}

pub fn save_rgb8(path: &Path, width: usize, height: usize, rgb: Vec<u8>) -> Result<(), IoError> {
    let img = RgbImage::from_raw(width as u32, height as u32, rgb)
        .ok_or_else(|| write_err(path, "buffer does not match dimensions"))?;
    img.save(path).map_err(|e| write_err(path, e))
}

pub fn save_frame(path: &Path, frame: &RgbFrame) -> Result<(), IoError> {
    save_rgb8(path, frame.width(), frame.height(), frame.to_rgb8())
}

pub fn save_mask(path: &Path, mask: &BinaryMask) -> Result<(), IoError> {
    let bytes = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let img = Luma8::from_raw(mask.width() as u32, mask.height() as u32, bytes)
        .ok_or_else(|| write_err(path, "buffer does not match dimensions"))?;
    img.save(path).map_err(|e| write_err(path, e))
}

pub fn load_mask(path: &Path) -> Result<BinaryMask, IoError> {
    let img = ImageReader::open(path)
        .map_err(|e| unreadable(path, e))?
        .decode()
        .map_err(|e| unreadable(path, e))?
        .into_luma8();
    let (w, h) = img.dimensions();
    Ok(BinaryMask::from_vec(w as usize, h as usize, img.as_raw().iter().map(|&v| v > 0).collect())?)
}

/// A numbered frame file found by [`scan_frames`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameFile {
    pub index: usize,
    pub path: PathBuf,
}

fn frame_index(path: &Path) -> Option<usize> {
    let stem = path.file_stem()?.to_str()?;
    let end = stem.rfind(|c: char| c.is_ascii_digit())? + 1;
    let start = stem[..end].rfind(|c: char| !c.is_ascii_digit()).map_or(0, |p| p + 1);
    stem[start..end].parse().ok()
}

/// Lists the numbered PNG frames of `dir` in index order, checking from the
/// file headers that every frame is square HD or SD and that sizes agree.
/// An empty directory yields an empty list and a warning.
pub fn scan_frames(dir: &Path) -> Result<Vec<FrameFile>, IoError> {
    if !dir.is_dir() {
        return Err(IoError::MissingDir(dir.to_path_buf()));
    }
    let entries = fs::read_dir(dir).map_err(|e| unreadable(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| unreadable(dir, e))?.path();
        let is_png = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if !path.is_file() || !is_png {
            continue;
        }
        match frame_index(&path) {
            Some(index) => files.push(FrameFile { index, path }),
            None => log::warn!("skipping unnumbered file {}", path.display()),
        }
    }
    files.sort_by(|a, b| a.index.cmp(&b.index).then_with(|| a.path.cmp(&b.path)));
    if files.is_empty() {
        log::warn!("no frames found in {}", dir.display());
    }
    let mut size: Option<u32> = None;
    for f in &files {
        let (w, h) = image::image_dimensions(&f.path).map_err(|e| unreadable(&f.path, e))?;
        if w != h || !(w == 720 || w == 360) {
            return Err(IoError::BadDimensions { file: f.path.clone(), width: w, height: h });
        }
        match size {
            Some(s) if s != w => return Err(IoError::MixedSizes { file: f.path.clone(), expected: s, found: w }),
            _ => size = Some(w),
        }
    }
    Ok(files)
}

/// Frames of `dir` in index order, decoded lazily.
pub fn ingest(dir: &Path) -> Result<impl Iterator<Item = Result<(usize, RgbFrame), IoError>>, IoError> {
    let files = scan_frames(dir)?;
    Ok(files.into_iter().map(|f| load_frame(&f.path).map(|frame| (f.index, frame))))
}

/// One manifest row. Mask paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub index: usize,
    pub file: String,
    pub kind: String,
    pub label: String,
    pub split: String,
    pub lesion_mask: String,
    pub overexposure_mask: String,
    pub foreground_mask: String,
}

/// A manifest row with its fields parsed and paths resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub index: usize,
    pub frame: PathBuf,
    pub kind: PhantomKind,
    pub label: FrameLabel,
    pub split: Split,
    pub lesion_mask: PathBuf,
    pub overexposure_mask: PathBuf,
    pub foreground_mask: PathBuf,
}

pub const MANIFEST_NAME: &str = "manifest.csv";

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:05}.png")
}

/// Renders `entries` into `dir` (frames at the top level, truth masks under
/// `masks/`) and writes `manifest.csv`.
pub fn write_corpus(dir: &Path, entries: &[CorpusEntry]) -> Result<PathBuf, IoError> {
    let masks = dir.join("masks");
    fs::create_dir_all(&masks).map_err(|e| write_err(&masks, e))?;
    let manifest_path = dir.join(MANIFEST_NAME);
    let mut w = csv::Writer::from_path(&manifest_path).map_err(|e| write_err(&manifest_path, e))?;
    for e in entries {
        let (frame, truth) = e.render().map_err(|err| write_err(dir, err))?;
        let file = frame_file_name(e.index);
        save_frame(&dir.join(&file), &frame)?;
        let mask_name = |what: &str| format!("masks/{what}_{:05}.png", e.index);
        let row = ManifestRow {
            index: e.index,
            file,
            kind: e.spec.kind.name().into(),
            label: truth.frame_label.name().into(),
            split: e.split.name().into(),
            lesion_mask: mask_name("lesion"),
            overexposure_mask: mask_name("overexposure"),
            foreground_mask: mask_name("foreground"),
        };
        save_mask(&dir.join(&row.lesion_mask), &truth.lesion_mask)?;
        save_mask(&dir.join(&row.overexposure_mask), &truth.overexposure_mask)?;
        save_mask(&dir.join(&row.foreground_mask), &truth.foreground_mask)?;
        w.serialize(&row).map_err(|err| write_err(&manifest_path, err))?;
    }
    w.flush().map_err(|e| write_err(&manifest_path, e))?;
    Ok(manifest_path)
}

/// Reads a manifest; `path` may name the CSV or the directory holding it.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, IoError> {
    let file = if path.is_dir() { path.join(MANIFEST_NAME) } else { path.to_path_buf() };
    let base = file.parent().map(Path::to_path_buf).unwrap_or_default();
    let bad = |reason: String| IoError::Manifest { path: file.clone(), reason };
    let mut r = csv::Reader::from_path(&file).map_err(|e| bad(e.to_string()))?;
    let mut out = Vec::new();
    for row in r.deserialize::<ManifestRow>() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let kind = PhantomKind::parse(&row.kind).ok_or_else(|| bad(format!("unknown kind {:?}", row.kind)))?;
        let label = FrameLabel::parse(&row.label).ok_or_else(|| bad(format!("unknown label {:?}", row.label)))?;
        let split = Split::parse(&row.split).ok_or_else(|| bad(format!("unknown split {:?}", row.split)))?;
        out.push(ManifestEntry {
            index: row.index,
            frame: base.join(&row.file),
            kind,
            label,
            split,
            lesion_mask: base.join(&row.lesion_mask),
            overexposure_mask: base.join(&row.overexposure_mask),
            foreground_mask: base.join(&row.foreground_mask),
        });
    }
    Ok(out)
}
