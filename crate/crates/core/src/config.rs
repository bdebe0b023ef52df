//! Pipeline configuration. Every key has a default, so an empty file (or no
//! file) is a valid configuration.
//!
//! ```toml
//! [otsu]
//! bins = 256
//!
//! [chanvese]
//! mu = 0.2
//! max_iters = 200
//! tol = 0.001
//!
//! [canny]
//! low = 0.10
//! high = 0.20
//!
//! [entropy]
//! bins = 25
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::imaging::CannyThresholds;
pub use crate::preprocess::{ChanVeseParams, EntropyConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config value: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OtsuConfig {
    pub bins: usize,
}

impl Default for OtsuConfig {
    fn default() -> Self {
        Self { bins: 256 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForegroundConfig {
    /// Pixels darker than this intensity are never foreground; a frame with
    /// no pixel above it has an empty foreground.
    pub min_intensity: f64,
}

impl Default for ForegroundConfig {
    fn default() -> Self {
        Self { min_intensity: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LesionConfig {
    pub box_size: usize,
    /// R/G ratio above which the baseline calls a pixel lesion.
    pub rg_threshold: f64,
    /// Soft-margin constant shared by both lesion SVMs.
    pub svm_c: f64,
    /// Training pixels drawn per class for the lesion SVMs.
    pub pixels_per_class: usize,
}

impl Default for LesionConfig {
    fn default() -> Self {
        Self { box_size: 36, rg_threshold: 0.53, svm_c: 10.0, pixels_per_class: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Frames used to bootstrap overexposure labels with k-means.
    pub overexposure_frames: usize,
    /// Balanced pixel sample for the overexposure SVM.
    pub overexposure_pixels: usize,
    /// Pixels used for the `(C, gamma)` grid search; the chosen point is then
    /// cross-validated on the full sample.
    pub search_pixels: usize,
    /// Lesion and normal frames whose pixels train the lesion SVMs.
    pub lesion_frames: usize,
    pub normal_frames: usize,
    /// Points per axis of the log grid over `C, gamma ∈ [10⁻¹, 10³]`.
    pub grid_size: usize,
    pub folds: usize,
    pub boost_trees: usize,
    pub boost_splits: usize,
    pub mlp_hidden: usize,
    pub mlp_epochs: usize,
    pub mlp_learning_rate: f64,
    pub mlp_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            overexposure_frames: 25,
            overexposure_pixels: 8000,
            search_pixels: 1000,
            lesion_frames: 11,
            normal_frames: 14,
            grid_size: 7,
            folds: 5,
            boost_trees: 11,
            boost_splits: 20,
            mlp_hidden: 220,
            mlp_epochs: 3000,
            mlp_learning_rate: 0.01,
            mlp_patience: 200,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub otsu: OtsuConfig,
    pub chanvese: ChanVeseParams,
    pub canny: CannyThresholds,
    pub entropy: EntropyConfig,
    pub foreground: ForegroundConfig,
    pub lesion: LesionConfig,
    pub train: TrainConfig,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.otsu.bins < 8 {
            return bad("otsu.bins must be at least 8");
        }
        if !(self.canny.low > 0.0 && self.canny.low < self.canny.high && self.canny.high <= 1.0) {
            return bad("canny thresholds need 0 < low < high <= 1");
        }
        if self.entropy.window.is_multiple_of(2) || self.entropy.ksize.is_multiple_of(2) || self.entropy.bins < 2 {
            return bad("entropy.window and entropy.ksize must be odd, entropy.bins >= 2");
        }
        if !(self.entropy.sigma > 0.0) || !(self.chanvese.mu >= 0.0) || !(self.chanvese.tol >= 0.0) {
            return bad("entropy.sigma must be positive, chanvese.mu and chanvese.tol non-negative");
        }
        if self.lesion.box_size == 0 || !(self.lesion.svm_c > 0.0) || !(self.lesion.rg_threshold > 0.0) {
            return bad("lesion.box_size, lesion.svm_c and lesion.rg_threshold must be positive");
        }
        if self.train.folds < 2 || self.train.grid_size == 0 {
            return bad("train.folds must be >= 2 and train.grid_size >= 1");
        }
        Ok(())
    }
}
