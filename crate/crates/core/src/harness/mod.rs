//! End-to-end workflows behind the `nbad` binary: phantom generation,
//! dataset preparation, training, evaluation, prediction and conversion.

mod eval;
mod phantom;
mod prepare;
mod train;

use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

pub use eval::{eval, evaluate_split, load_input, load_network, predict, Prediction};
pub use phantom::{generate_phantoms, phantom_volume, PhantomConfig, PhantomLayout, MIN_DIMS};
pub use prepare::{convert, prepare, prepare_volume, PrepareConfig, PrepareSummary, MANIFEST_NAME};
pub use train::{
    curves_csv, default_augment, evaluate, load_split, parse_curves, to_batch, train, CurveRow, Labeled, TrainConfig,
    TrainSummary, CURVES_HEADER,
};

/// Writes `bytes` to a temporary file beside `path` and renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let wrap = |e: std::io::Error| Error::from(e).at(path);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    tmp.as_file().sync_all().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}
