use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::dataset::{
    compose_sample, compute_voi, extract_slice, split_balance, Manifest, ManifestEntry, Plane, Sample,
    DEFAULT_THRESHOLD,
};
use crate::image::Image;
use crate::volume::{export_png, is_volume_path, load_volume, reorient_canonical, Volume};
use crate::{Error, Result, CLASS_NAMES, NUM_CLASSES};

use super::write_atomic;

pub const MANIFEST_NAME: &str = "manifest.jsonl";

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareConfig {
    /// Directory with one subdirectory per class name.
    pub input: PathBuf,
    pub out: PathBuf,
    pub size: usize,
    pub train_fraction: f64,
    pub seed: u64,
}

#[derive(Debug)]
pub struct PrepareSummary {
    pub manifest_path: PathBuf,
    pub manifest: Manifest,
    /// Volumes that could not be turned into samples.
    pub skipped: Vec<(PathBuf, Error)>,
}

/// Reorients, finds the VOI and composes the three-plane sample at
/// `size × size`. Returns the sample and its axial/coronal/sagittal indices.
pub fn prepare_volume(v: &Volume, size: usize) -> Result<(Image, [usize; 3])> {
    let v = reorient_canonical(v);
    let voi = compute_voi(&v, DEFAULT_THRESHOLD);
    let image = compose_sample(&v, &voi, (size, size))?;
    Ok((image, Sample::plane_indices(&voi)))
}

fn rel(path: &Path, base: &Path) -> String {
    let p = path.strip_prefix(base).unwrap_or(path);
    p.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

fn class_files(dir: &Path, class: usize) -> Result<Vec<PathBuf>> {
    let listing = std::fs::read_dir(dir).map_err(|e| Error::from(e).at(dir))?;
    let mut files: Vec<PathBuf> = listing
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_volume_path(p))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptyClass(class));
    }
    Ok(files)
}

/// Turns a directory of class-labelled volumes into PNG samples and a
/// balanced train/test manifest at `out/manifest.jsonl`.
///
/// Volumes that fail to load or compose are logged and skipped; a class
/// where every volume fails is an error.
pub fn prepare(cfg: &PrepareConfig) -> Result<PrepareSummary> {
    if cfg.size == 0 {
        return Err(Error::InvalidConfig("sample size 0".into()));
    }
    let mut dirs = BTreeMap::new();
    for (class, name) in CLASS_NAMES.iter().enumerate() {
        dirs.insert(class, cfg.input.join(name));
    }
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (&class, dir) in &dirs {
        let out_dir = cfg.out.join(CLASS_NAMES[class]);
        std::fs::create_dir_all(&out_dir).map_err(|e| Error::from(e).at(&out_dir))?;
        let mut ok = 0;
        let files = class_files(dir, class)?;
        for file in &files {
            let result = load_volume(file).and_then(|v| prepare_volume(&v, cfg.size));
            let (image, planes) = match result {
                Ok(r) => r,
                Err(e) => {
                    warn!("skipping {}: {e}", file.display());
                    skipped.push((file.clone(), e));
                    continue;
                }
            };
            let name = file.file_name().unwrap().to_string_lossy();
            let png = out_dir.join(format!("{name}.png"));
            write_atomic(&png, &export_png(&image)?)?;
            entries.push(ManifestEntry {
                source_volume: Some(rel(file, &cfg.input)),
                plane_indices: Some(planes),
                ..ManifestEntry::new(rel(&png, &cfg.out), class)
            });
            ok += 1;
        }
        if ok == 0 {
            return Err(Error::AllFilesFailed(CLASS_NAMES[class].to_string()));
        }
        info!("{}: {ok} of {} volumes prepared", CLASS_NAMES[class], files.len());
    }
    debug_assert_eq!(dirs.len(), NUM_CLASSES);
    let manifest = split_balance(&Manifest { entries }, cfg.train_fraction, cfg.seed)?;
    let manifest_path = cfg.out.join(MANIFEST_NAME);
    manifest.save(&manifest_path)?;
    Ok(PrepareSummary {
        manifest_path,
        manifest,
        skipped,
    })
}

/// One slice of a volume as an 8-bit grayscale PNG, rescaled to the slice's
/// own min/max.
pub fn convert(input: &Path, plane: Plane, index: usize, out: &Path) -> Result<Image> {
    let v = reorient_canonical(&load_volume(input)?);
    let slice = extract_slice(&v, plane, index)?;
    let (lo, hi) = slice.min_max();
    let range = hi - lo;
    let data = slice
        .data
        .iter()
        .map(|&x| {
            if range > 0.0 {
                ((x - lo) / range).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let image = Image::new(1, slice.height, slice.width, data)?;
    write_atomic(out, &export_png(&image)?)?;
    Ok(image)
}
