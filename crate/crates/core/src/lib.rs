//! Brain MRI abnormality classification.
//!
//! The crate covers the whole path from raw medical volumes to a trained
//! five-class convolutional classifier:
//!
//! * [`volume`] reads and writes NIfTI-1, Analyze 7.5, MetaImage and NRRD
//!   volumes, reorients them to RAS and exports PNG slices.
//! * [`dataset`] finds a volume of interest, composes three-plane samples and
//!   builds balanced train/test manifests.
//! * [`augment`] implements scale jitter, random crops and mirroring.
//! * [`nn`] holds the tensor kernels (convolution, pooling, affine, ReLU,
//!   dropout), the multiclass hinge loss, SGD and a finite-difference checker.
//! * [`model`] assembles the seven-conv / three-FC network, trains it and
//!   persists checkpoints.
//! * [`metrics`] turns predictions into accuracy, sensitivity and specificity.
//! * [`harness`] wires everything into the `nbad` command line and generates
//!   synthetic phantom corpora.

pub mod augment;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod image;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod rng;
pub mod volume;

pub use error::{Error, Result};

/// Number of diagnostic classes.
pub const NUM_CLASSES: usize = 5;

/// Class names indexed by class id.
pub const CLASS_NAMES: [&str; NUM_CLASSES] = ["healthy", "hgg", "lgg", "alzheimer", "ms"];

/// Looks up a class id by name (case-insensitive).
pub fn class_id(name: &str) -> Option<usize> {
    CLASS_NAMES.iter().position(|c| c.eq_ignore_ascii_case(name))
}
