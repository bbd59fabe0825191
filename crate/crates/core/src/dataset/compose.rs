use serde::{Deserialize, Serialize};

use super::resize::resize_bilinear;
use super::slice::{extract_slice, Plane};
use super::voi::VoiBox;
use crate::image::Image;
use crate::volume::Volume;
use crate::{Error, Result};

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSource {
    pub volume: String,
    /// Axial (z), coronal (y) and sagittal (x) slice indices.
    pub plane_indices: [usize; 3],
}

/// A three-channel network input with its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Image,
    pub label: usize,
    pub source: Option<SampleSource>,
}

impl Sample {
    /// Axial, coronal and sagittal indices of the central VOI slices.
    pub fn plane_indices(voi: &VoiBox) -> [usize; 3] {
        [voi.center(2), voi.center(1), voi.center(0)]
    }
}

/// Stacks the central axial, coronal and sagittal slices of the VOI into a
/// `3 × H × W` image. Each slice is cropped to the VOI, rescaled by the
/// VOI's min/max (constant VOIs map to 0) and resized bilinearly.
pub fn compose_sample(v: &Volume, voi: &VoiBox, out_size: (usize, usize)) -> Result<Image> {
    if !voi.is_valid_for(v.dims) {
        return Err(Error::BadInput(format!("VOI {voi:?} outside dims {:?}", v.dims)));
    }
    if (0..3).any(|a| voi.extent(a) == 0) || out_size.0 == 0 || out_size.1 == 0 {
        return Err(Error::DegenerateVoi);
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for z in voi.lo[2]..=voi.hi[2] {
        for y in voi.lo[1]..=voi.hi[1] {
            for x in voi.lo[0]..=voi.hi[0] {
                let val = v.value(x, y, z);
                lo = lo.min(val);
                hi = hi.max(val);
            }
        }
    }
    let range = hi - lo;
    let planes = Plane::ALL
        .iter()
        .map(|&plane| {
            let fixed = plane.fixed_axis();
            let slice = extract_slice(v, plane, voi.center(fixed))?;
            let (ra, ca) = plane.free_axes();
            let (h, w) = (voi.extent(ra), voi.extent(ca));
            let mut data = Vec::with_capacity(h * w);
            for r in voi.lo[ra]..=voi.hi[ra] {
                for c in voi.lo[ca]..=voi.hi[ca] {
                    let val = slice.at(0, r, c) as f64;
                    let scaled = if range > 0.0 { (val - lo) / range } else { 0.0 };
                    data.push(scaled.clamp(0.0, 1.0) as f32);
                }
            }
            Ok(resize_bilinear(&Image::new(1, h, w, data)?, out_size))
        })
        .collect::<Result<Vec<_>>>()?;
    Image::stack(&planes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::compute_voi;
    use crate::volume::{Orientation, VoxelData};

    fn radial(n: usize) -> Volume {
        let c = (n as f64 - 1.0) / 2.0;
        let mut data = Vec::new();
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let d2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2) + (z as f64 - c).powi(2);
                    data.push((100.0 - d2) as f32);
                }
            }
        }
        Volume::new([n; 3], [1.0; 3], Orientation::RAS, VoxelData::F32(data)).unwrap()
    }

    #[test]
    fn symmetric_volume_gives_identical_channels() {
        let v = radial(9);
        let img = compose_sample(&v, &compute_voi(&v, 0.1), (16, 16)).unwrap();
        assert_eq!(img.channel(0), img.channel(1));
        assert_eq!(img.channel(1), img.channel(2));
    }

    #[test]
    fn output_shape_and_range() {
        let v = radial(7);
        let voi = VoiBox {
            lo: [1, 0, 2],
            hi: [5, 3, 6],
        };
        let img = compose_sample(&v, &voi, (10, 12)).unwrap();
        assert_eq!((img.channels, img.height, img.width), (3, 10, 12));
        assert!(img.data.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn constant_voi_is_zero() {
        let v = Volume::new([4, 4, 4], [1.0; 3], Orientation::RAS, VoxelData::U8(vec![77; 64])).unwrap();
        let img = compose_sample(&v, &VoiBox::full([4, 4, 4]), (5, 5)).unwrap();
        assert!(img.data.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn channels_are_central_slices() {
        // value = x + 10 y + 100 z on a 3x3x3 grid, full VOI, no resize
        let data = (0..27)
            .map(|i| ((i % 3) + 10 * ((i / 3) % 3) + 100 * (i / 9)) as f32)
            .collect();
        let v = Volume::new([3, 3, 3], [1.0; 3], Orientation::RAS, VoxelData::F32(data)).unwrap();
        let img = compose_sample(&v, &VoiBox::full([3, 3, 3]), (3, 3)).unwrap();
        let scale = |val: f32| val / 222.0;
        assert_eq!(img.at(0, 2, 0), scale(2.0 + 100.0));
        assert_eq!(img.at(1, 0, 2), scale(10.0 + 200.0));
        assert_eq!(img.at(2, 2, 1), scale(1.0 + 20.0 + 100.0));
        assert_eq!(Sample::plane_indices(&VoiBox::full([3, 3, 3])), [1, 1, 1]);
    }
}
