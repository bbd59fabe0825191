use crate::volume::Volume;

/// Fraction of the volume maximum above which a voxel counts as foreground.
pub const DEFAULT_THRESHOLD: f64 = 0.1;

/// Inclusive voxel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct VoiBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl VoiBox {
    pub fn full(dims: [usize; 3]) -> VoiBox {
        VoiBox {
            lo: [0; 3],
            hi: [dims[0] - 1, dims[1] - 1, dims[2] - 1],
        }
    }

    pub fn extent(&self, axis: usize) -> usize {
        self.hi[axis] + 1 - self.lo[axis]
    }

    /// Floor midpoint along `axis`.
    pub fn center(&self, axis: usize) -> usize {
        (self.lo[axis] + self.hi[axis]) / 2
    }

    pub fn is_valid_for(&self, dims: [usize; 3]) -> bool {
        (0..3).all(|a| self.lo[a] <= self.hi[a] && self.hi[a] < dims[a])
    }
}

/// Tight bounding box of voxels brighter than `threshold_fraction * max`.
/// Volumes without any such voxel (all zero, or non-positive maximum) yield
/// the full extent.
pub fn compute_voi(v: &Volume, threshold_fraction: f64) -> VoiBox {
    let (_, max) = v.min_max();
    let threshold = threshold_fraction * max;
    let mut lo = v.dims;
    let mut hi = [0usize; 3];
    let mut any = false;
    if max > 0.0 {
        for z in 0..v.dims[2] {
            for y in 0..v.dims[1] {
                for x in 0..v.dims[0] {
                    if v.value(x, y, z) > threshold {
                        any = true;
                        for (a, c) in [x, y, z].into_iter().enumerate() {
                            lo[a] = lo[a].min(c);
                            hi[a] = hi[a].max(c);
                        }
                    }
                }
            }
        }
    }
    if any {
        VoiBox { lo, hi }
    } else {
        VoiBox::full(v.dims)
    }
}
