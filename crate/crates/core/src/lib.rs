//! Autofluorescence bronchoscopy (AFB) video analysis.
//!
//! Frames flow through three stages:
//!
//! 1. [`preprocess`]: downsample to 180×180, segment the foreground and find
//!    overexposed pixels.
//! 2. [`features`]: seven frame-level features, scored by a frame classifier
//!    that calls the frame informative or uninformative.
//! 3. [`lesion`]: on informative frames, two cost-asymmetric pixel SVMs,
//!    region growing and a 36×36 box vote give a lesion likelihood.
//!
//! [`pipeline`] runs the stages over frame batches, [`training`] fits every
//! model from a labelled corpus, and [`synth`] generates that corpus.

pub mod config;
pub mod features;
pub mod imaging;
pub mod io;
pub mod lesion;
pub mod pipeline;
pub mod preprocess;
pub mod report;
pub mod synth;
pub mod training;

pub use afb_ml as ml;

/// Working resolution of stages 1 and 2.
pub const WORK_SIZE: usize = 180;
