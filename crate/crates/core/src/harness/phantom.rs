//! Synthetic five-class phantom volumes.
//!
//! Every volume is a smooth ellipsoidal "brain" with a small dark central
//! ventricle. Class-specific structures:
//!
//! | class | structure |
//! |-------|-----------|
//! | 0 | none |
//! | 1 | one large bright blob, radius 15–25% of the extent |
//! | 2 | one small blob, radius 5–10%, at 60% of class 1's contrast |
//! | 3 | ventricle twice the baseline radius |
//! | 4 | 5–9 small bright speckles on the central planes |
//!
//! Blobs are placed near the center so all three central slices cut them.
//! Gaussian noise with σ = 5% of the dynamic range is added and negative
//! values are clamped to zero.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::rng::{self, Stream};
use crate::volume::{save_volume, Endianness, FormatKind, Orientation, Volume, VoxelData};
use crate::{Error, Result, CLASS_NAMES, NUM_CLASSES};

const PHANTOM_KEY: u64 = 0x9A7;

pub const MIN_DIMS: usize = 32;
pub const BLOB_CONTRAST: f64 = 0.45;
pub const SMALL_BLOB_CONTRAST: f64 = 0.6 * BLOB_CONTRAST;
pub const VENTRICLE_FRACTION: f64 = 0.07;
pub const NOISE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomConfig {
    pub per_class: usize,
    pub dims: usize,
    pub seed: u64,
}

/// Geometry drawn for one phantom, kept for tests and demos.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomLayout {
    pub center: [f64; 3],
    pub ventricle_radius: f64,
    /// `(center, radius, contrast)` of every bright structure.
    pub blobs: Vec<([f64; 3], f64, f64)>,
}

fn uniform(rng: &mut Stream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn layout(class: usize, d: usize, rng: &mut Stream) -> PhantomLayout {
    let df = d as f64;
    let mid = ((d - 1) / 2) as f64;
    let center = [mid; 3];
    let base_v = VENTRICLE_FRACTION * df;
    let ventricle_radius = if class == 3 { 2.0 * base_v } else { base_v };
    let mut blobs = Vec::new();
    let near_center = |rng: &mut Stream, r: f64| {
        let mut c = center;
        for x in &mut c {
            *x += uniform(rng, -r / 3.0, r / 3.0);
        }
        c
    };
    match class {
        1 => {
            let r = uniform(rng, 0.15, 0.25) * df;
            blobs.push((near_center(rng, r), r, BLOB_CONTRAST));
        }
        2 => {
            let r = uniform(rng, 0.05, 0.10) * df;
            blobs.push((near_center(rng, r), r, SMALL_BLOB_CONTRAST));
        }
        4 => {
            let count = rng.random_range(5..=9);
            let r = (0.025 * df).max(1.5);
            for _ in 0..count {
                let axis = rng.random_range(0..3);
                let mut c = center;
                for (a, x) in c.iter_mut().enumerate() {
                    if a != axis {
                        // stay well inside the brain and clear of the ventricle
                        let off = uniform(rng, 0.12, 0.28) * df;
                        *x += if rng.random::<bool>() { off } else { -off };
                    }
                }
                blobs.push((c, r, BLOB_CONTRAST));
            }
        }
        _ => {}
    }
    PhantomLayout {
        center,
        ventricle_radius,
        blobs,
    }
}

fn dist(p: [f64; 3], c: [f64; 3]) -> f64 {
    ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt()
}

/// The phantom for `(seed, class, index)` and the layout it was drawn from.
pub fn phantom_volume(class: usize, index: usize, dims: usize, seed: u64) -> Result<(Volume, PhantomLayout)> {
    if class >= NUM_CLASSES {
        return Err(Error::ClassOutOfRange(class));
    }
    if dims < MIN_DIMS {
        return Err(Error::InvalidConfig(format!("phantom dims {dims} below {MIN_DIMS}")));
    }
    let mut rng = rng::stream(seed, &[PHANTOM_KEY, class as u64, index as u64]);
    let lay = layout(class, dims, &mut rng);
    let df = dims as f64;
    let semi = [0.40 * df, 0.44 * df, 0.36 * df].map(|s| s * uniform(&mut rng, 0.92, 1.0));
    let n = dims * dims * dims;
    let mut clean = vec![0f64; n];
    for z in 0..dims {
        for y in 0..dims {
            for x in 0..dims {
                let p = [x as f64, y as f64, z as f64];
                let rho2: f64 = (0..3).map(|a| ((p[a] - lay.center[a]) / semi[a]).powi(2)).sum();
                if rho2 >= 1.0 {
                    continue;
                }
                let mut v = 0.45 + 0.15 * (1.0 - rho2);
                if dist(p, lay.center) < lay.ventricle_radius {
                    v = 0.1;
                }
                for &(c, r, contrast) in &lay.blobs {
                    if dist(p, c) < r {
                        v = 0.45 + 0.15 * (1.0 - rho2) + contrast;
                    }
                }
                clean[(z * dims + y) * dims + x] = v;
            }
        }
    }
    let (lo, hi) = clean
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let noise = Normal::new(0.0, NOISE_FRACTION * (hi - lo)).expect("positive sigma");
    let data = clean
        .into_iter()
        .map(|v| (v + noise.sample(&mut rng)).max(0.0) as f32)
        .collect();
    let vol = Volume::new([dims; 3], [1.0; 3], Orientation::RAS, VoxelData::F32(data))?;
    Ok((vol, lay))
}

/// Writes `per_class` NIfTI phantoms into one subdirectory per class and
/// returns the written paths.
pub fn generate_phantoms(out: &Path, cfg: &PhantomConfig) -> Result<Vec<PathBuf>> {
    if cfg.dims < MIN_DIMS {
        return Err(Error::InvalidConfig(format!(
            "phantom dims {} below {MIN_DIMS}",
            cfg.dims
        )));
    }
    let mut written = Vec::with_capacity(NUM_CLASSES * cfg.per_class);
    for (class, name) in CLASS_NAMES.iter().enumerate() {
        let dir = out.join(name);
        std::fs::create_dir_all(&dir).map_err(|e| Error::from(e).at(&dir))?;
        for i in 0..cfg.per_class {
            let (v, _) = phantom_volume(class, i, cfg.dims, cfg.seed)?;
            let path = dir.join(format!("{name}_{i:03}.nii"));
            save_volume(&path, &v, FormatKind::Nifti1, Endianness::Little).map_err(|e| e.at(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_in_ball(v: &Volume, c: [f64; 3], r: f64) -> f64 {
        let (mut s, mut n) = (0.0, 0);
        for z in 0..v.dims[2] {
            for y in 0..v.dims[1] {
                for x in 0..v.dims[0] {
                    if dist([x as f64, y as f64, z as f64], c) < r {
                        s += v.value(x, y, z);
                        n += 1;
                    }
                }
            }
        }
        s / n as f64
    }

    #[test]
    fn deterministic() {
        let a = phantom_volume(4, 3, 32, 42).unwrap();
        assert_eq!(a, phantom_volume(4, 3, 32, 42).unwrap());
        assert_ne!(a.0, phantom_volume(4, 4, 32, 42).unwrap().0);
    }

    #[test]
    fn intensity_ordering() {
        for i in 0..3 {
            let (v1, l1) = phantom_volume(1, i, 48, 7).unwrap();
            let (v2, l2) = phantom_volume(2, i, 48, 7).unwrap();
            let b1 = mean_in_ball(&v1, l1.blobs[0].0, l1.blobs[0].1 * 0.8);
            let b2 = mean_in_ball(&v2, l2.blobs[0].0, l2.blobs[0].1 * 0.8);
            assert!(b1 > b2, "{b1} {b2}");

            let (v0, l0) = phantom_volume(0, i, 48, 7).unwrap();
            let (v3, _) = phantom_volume(3, i, 48, 7).unwrap();
            let r = 2.0 * l0.ventricle_radius;
            assert!(mean_in_ball(&v3, l0.center, r) < mean_in_ball(&v0, l0.center, r));
        }
    }

    #[test]
    fn speckle_count_and_planes() {
        for i in 0..10 {
            let (_, l) = phantom_volume(4, i, 64, 1).unwrap();
            assert!((5..=9).contains(&l.blobs.len()));
            for (c, _, _) in &l.blobs {
                assert!(c.contains(&31.0));
            }
        }
    }

    #[test]
    fn small_dims_rejected() {
        assert!(matches!(phantom_volume(0, 0, 16, 0), Err(Error::InvalidConfig(_))));
    }
}
