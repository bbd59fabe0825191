//! From volumes to labeled three-plane samples and balanced manifests.

mod compose;
mod manifest;
mod resize;
mod slice;
mod voi;

pub use self::compose::{compose_sample, Sample, SampleSource};
pub use self::manifest::{build_manifest, split_balance, Manifest, ManifestEntry, Split};
pub use self::resize::resize_bilinear;
pub use self::slice::{extract_slice, Plane};
pub use self::voi::{compute_voi, VoiBox, DEFAULT_THRESHOLD};

/// Default side length of composed samples.
pub const DEFAULT_SAMPLE_SIZE: usize = 224;
