use serde::{Deserialize, Serialize};

use crate::image::Image;
use crate::volume::Volume;
use crate::{Error, Result};

/// Anatomical slicing plane of a RAS volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    /// Fixes z; image rows run along x, columns along y.
    Axial,
    /// Fixes y; rows along x, columns along z.
    Coronal,
    /// Fixes x; rows along y, columns along z.
    Sagittal,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Axial, Plane::Coronal, Plane::Sagittal];

    /// Storage axis held constant.
    pub fn fixed_axis(self) -> usize {
        match self {
            Plane::Axial => 2,
            Plane::Coronal => 1,
            Plane::Sagittal => 0,
        }
    }

    /// Storage axes mapped to image rows and columns.
    pub fn free_axes(self) -> (usize, usize) {
        match self {
            Plane::Axial => (0, 1),
            Plane::Coronal => (0, 2),
            Plane::Sagittal => (1, 2),
        }
    }
}

impl std::str::FromStr for Plane {
    type Err = Error;

    fn from_str(s: &str) -> Result<Plane> {
        match s.to_ascii_lowercase().as_str() {
            "axial" => Ok(Plane::Axial),
            "coronal" => Ok(Plane::Coronal),
            "sagittal" => Ok(Plane::Sagittal),
            other => Err(Error::BadInput(format!("unknown plane `{other}`"))),
        }
    }
}

/// Single-channel slice at `index` along the plane's fixed axis.
pub fn extract_slice(v: &Volume, plane: Plane, index: usize) -> Result<Image> {
    let fixed = plane.fixed_axis();
    if index >= v.dims[fixed] {
        return Err(Error::IndexOutOfRange {
            index,
            extent: v.dims[fixed],
        });
    }
    let (ra, ca) = plane.free_axes();
    let (h, w) = (v.dims[ra], v.dims[ca]);
    let mut data = Vec::with_capacity(h * w);
    let mut p = [0usize; 3];
    p[fixed] = index;
    for r in 0..h {
        for c in 0..w {
            p[ra] = r;
            p[ca] = c;
            data.push(v.value(p[0], p[1], p[2]) as f32);
        }
    }
    Image::new(1, h, w, data)
}
