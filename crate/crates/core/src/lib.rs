//! Learned resolution selection for coarse-to-fine image segmentation.
//!
//! Training images are segmented at every level of a Burt pyramid, each level
//! is scored by a weighted geometric mean of accuracy and (normalized) time,
//! and the best level becomes the image's class label. A boosted decision
//! tree ensemble then learns the label from LBP regional histograms, so new
//! images can be segmented directly at their predicted resolution.
//!
//! Modules:
//! - [`imaging`]: rasters, pyramid decomposition, mask upsampling, PGM/PNG I/O
//! - [`features`]: LBP labeling and regional histogram features
//! - [`segment`]: Chan-Vese and region-growing backends, refinement, the timed driver
//! - [`tradeoff`]: the accuracy/time trade-off measure and best-level labeling
//! - [`learn`]: weighted trees, SAMME AdaBoost, RAMOBoost, ADASYN
//! - [`eval`]: Dice, confusion metrics, aggregation, impact ratios
//! - [`harness`]: corpus handling, labeling, cross-validated experiments, inference

pub mod error;
pub mod eval;
pub mod features;
pub mod harness;
pub mod imaging;
pub mod learn;
pub mod rng;
pub mod segment;
pub mod tradeoff;

pub use error::{Error, Result};
pub use imaging::{BinaryMask, GrayImage, Pyramid};
