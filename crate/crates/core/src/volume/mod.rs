//! Medical volume codecs and canonical reorientation.

mod analyze;
mod binhdr;
mod metaimage;
mod nifti;
mod nrrd;
mod png_io;

use std::fmt;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

pub use self::png_io::{decode_png, export_png};

/// On-disk voxel element type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementType {
    U8,
    I16,
    F32,
}

impl ElementType {
    pub const ALL: [ElementType; 3] = [ElementType::U8, ElementType::I16, ElementType::F32];

    pub fn size(self) -> usize {
        match self {
            ElementType::U8 => 1,
            ElementType::I16 => 2,
            ElementType::F32 => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endianness {
    Little,
    Big,
}

impl Endianness {
    pub const ALL: [Endianness; 2] = [Endianness::Little, Endianness::Big];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormatKind {
    Nifti1,
    Analyze75,
    MetaImage,
    Nrrd,
}

impl FormatKind {
    pub const ALL: [FormatKind; 4] = [
        FormatKind::Nifti1,
        FormatKind::Analyze75,
        FormatKind::MetaImage,
        FormatKind::Nrrd,
    ];

    /// Conventional extension of the primary file.
    pub fn extension(self) -> &'static str {
        match self {
            FormatKind::Nifti1 => "nii",
            FormatKind::Analyze75 => "hdr",
            FormatKind::MetaImage => "mha",
            FormatKind::Nrrd => "nrrd",
        }
    }
}

/// Anatomical direction a storage axis increases towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisCode {
    R,
    L,
    A,
    P,
    S,
    I,
}

impl AxisCode {
    /// 0 = left-right, 1 = posterior-anterior, 2 = inferior-superior.
    pub fn anatomical_axis(self) -> usize {
        match self {
            AxisCode::R | AxisCode::L => 0,
            AxisCode::A | AxisCode::P => 1,
            AxisCode::S | AxisCode::I => 2,
        }
    }

    /// True for R, A and S.
    pub fn is_positive(self) -> bool {
        matches!(self, AxisCode::R | AxisCode::A | AxisCode::S)
    }

    pub fn from_axis(axis: usize, positive: bool) -> AxisCode {
        match (axis, positive) {
            (0, true) => AxisCode::R,
            (0, false) => AxisCode::L,
            (1, true) => AxisCode::A,
            (1, false) => AxisCode::P,
            (2, true) => AxisCode::S,
            _ => AxisCode::I,
        }
    }

    pub fn letter(self) -> char {
        match self {
            AxisCode::R => 'R',
            AxisCode::L => 'L',
            AxisCode::A => 'A',
            AxisCode::P => 'P',
            AxisCode::S => 'S',
            AxisCode::I => 'I',
        }
    }
}

/// Storage-axis to anatomical-direction mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Orientation(pub [AxisCode; 3]);

impl Orientation {
    pub const RAS: Orientation = Orientation([AxisCode::R, AxisCode::A, AxisCode::S]);

    pub fn is_valid(&self) -> bool {
        let mut seen = [false; 3];
        for c in self.0 {
            seen[c.anatomical_axis()] = true;
        }
        seen.iter().all(|&s| s)
    }

    pub fn is_canonical(&self) -> bool {
        *self == Orientation::RAS
    }

    /// Direction cosines in RAS world space, one column per storage axis.
    pub fn direction_columns(&self) -> [[f64; 3]; 3] {
        let mut cols = [[0.0; 3]; 3];
        for (i, c) in self.0.iter().enumerate() {
            cols[i][c.anatomical_axis()] = if c.is_positive() { 1.0 } else { -1.0 };
        }
        cols
    }

    /// Nearest orientation for direction columns given in RAS world space.
    /// Each storage axis takes the world axis with the largest cosine, the
    /// strongest columns choosing first.
    pub fn from_direction_columns(cols: [[f64; 3]; 3]) -> Result<Orientation> {
        let mut candidates = Vec::with_capacity(9);
        for (i, col) in cols.iter().enumerate() {
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm <= 0.0 {
                return Err(Error::MalformedHeader(format!("degenerate direction for axis {i}")));
            }
            for (a, v) in col.iter().enumerate() {
                candidates.push(((v / norm).abs(), i, a, *v >= 0.0));
            }
        }
        candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut codes: [Option<AxisCode>; 3] = [None; 3];
        let mut used = [false; 3];
        for (_, i, a, pos) in candidates {
            if codes[i].is_none() && !used[a] {
                codes[i] = Some(AxisCode::from_axis(a, pos));
                used[a] = true;
            }
        }
        Ok(Orientation([codes[0].unwrap(), codes[1].unwrap(), codes[2].unwrap()]))
    }
}

impl Default for Orientation {
    fn default() -> Self {
        Orientation::RAS
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.0 {
            write!(f, "{}", c.letter())?;
        }
        Ok(())
    }
}

/// Typed voxel payload, x-fastest.
#[derive(Debug, Clone)]
pub enum VoxelData {
    U8(Vec<u8>),
    I16(Vec<i16>),
    F32(Vec<f32>),
}

impl VoxelData {
    pub fn len(&self) -> usize {
        match self {
            VoxelData::U8(v) => v.len(),
            VoxelData::I16(v) => v.len(),
            VoxelData::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn element_type(&self) -> ElementType {
        match self {
            VoxelData::U8(_) => ElementType::U8,
            VoxelData::I16(_) => ElementType::I16,
            VoxelData::F32(_) => ElementType::F32,
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        match self {
            VoxelData::U8(v) => v[i] as f64,
            VoxelData::I16(v) => v[i] as f64,
            VoxelData::F32(v) => v[i] as f64,
        }
    }

    /// Gathers `src[idx]` for every index in `order`.
    fn permuted(&self, order: &[usize]) -> VoxelData {
        match self {
            VoxelData::U8(v) => VoxelData::U8(order.iter().map(|&i| v[i]).collect()),
            VoxelData::I16(v) => VoxelData::I16(order.iter().map(|&i| v[i]).collect()),
            VoxelData::F32(v) => VoxelData::F32(order.iter().map(|&i| v[i]).collect()),
        }
    }

    pub(crate) fn to_bytes(&self, endian: Endianness) -> Vec<u8> {
        let big = endian == Endianness::Big;
        match self {
            VoxelData::U8(v) => v.clone(),
            VoxelData::I16(v) => v
                .iter()
                .flat_map(|x| if big { x.to_be_bytes() } else { x.to_le_bytes() })
                .collect(),
            VoxelData::F32(v) => v
                .iter()
                .flat_map(|x| if big { x.to_be_bytes() } else { x.to_le_bytes() })
                .collect(),
        }
    }

    pub(crate) fn from_bytes(bytes: &[u8], ty: ElementType, count: usize, endian: Endianness) -> Result<VoxelData> {
        let need = count * ty.size();
        if bytes.len() < need {
            return Err(Error::TruncatedFile {
                expected: need,
                found: bytes.len(),
            });
        }
        let bytes = &bytes[..need];
        let big = endian == Endianness::Big;
        Ok(match ty {
            ElementType::U8 => VoxelData::U8(bytes.to_vec()),
            ElementType::I16 => VoxelData::I16(
                bytes
                    .chunks_exact(2)
                    .map(|c| {
                        let b = [c[0], c[1]];
                        if big {
                            i16::from_be_bytes(b)
                        } else {
                            i16::from_le_bytes(b)
                        }
                    })
                    .collect(),
            ),
            ElementType::F32 => VoxelData::F32(
                bytes
                    .chunks_exact(4)
                    .map(|c| {
                        let b = [c[0], c[1], c[2], c[3]];
                        if big {
                            f32::from_be_bytes(b)
                        } else {
                            f32::from_le_bytes(b)
                        }
                    })
                    .collect(),
            ),
        })
    }
}

impl PartialEq for VoxelData {
    /// Bitwise equality; float payloads compare by bit pattern.
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (VoxelData::U8(a), VoxelData::U8(b)) => a == b,
            (VoxelData::I16(a), VoxelData::I16(b)) => a == b,
            (VoxelData::F32(a), VoxelData::F32(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

/// A 3-D voxel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    pub dims: [usize; 3],
    /// Millimetres per voxel along each storage axis.
    pub spacing: [f64; 3],
    pub orientation: Orientation,
    pub voxels: VoxelData,
}

impl Volume {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], orientation: Orientation, voxels: VoxelData) -> Result<Volume> {
        let v = Volume {
            dims,
            spacing,
            orientation,
            voxels,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(Error::MalformedHeader(format!("zero extent in {:?}", self.dims)));
        }
        if self.voxels.len() != self.len() {
            return Err(Error::MalformedHeader(format!(
                "{} voxels for dims {:?}",
                self.voxels.len(),
                self.dims
            )));
        }
        if !self.spacing.iter().all(|&s| s > 0.0 && s.is_finite()) {
            return Err(Error::MalformedHeader(format!(
                "non-positive spacing {:?}",
                self.spacing
            )));
        }
        if !self.orientation.is_valid() {
            return Err(Error::MalformedHeader(format!(
                "orientation {} is not a permutation",
                self.orientation
            )));
        }
        Ok(())
    }

    pub fn element_type(&self) -> ElementType {
        self.voxels.element_type()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn value(&self, x: usize, y: usize, z: usize) -> f64 {
        self.voxels.get(self.index(x, y, z))
    }

    /// Smallest and largest voxel value.
    pub fn min_max(&self) -> (f64, f64) {
        (0..self.len()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let v = self.voxels.get(i);
            (lo.min(v), hi.max(v))
        })
    }
}

/// Permutes and flips storage axes so that they run Right, Anterior,
/// Superior. Spacing and dims follow their axes.
pub fn reorient_canonical(v: &Volume) -> Volume {
    if v.orientation.is_canonical() {
        return v.clone();
    }
    // src_axis[a]: storage axis of the input that maps onto canonical axis a
    let mut src_axis = [0usize; 3];
    let mut flip = [false; 3];
    for (i, code) in v.orientation.0.iter().enumerate() {
        src_axis[code.anatomical_axis()] = i;
        flip[code.anatomical_axis()] = !code.is_positive();
    }
    let dims = [v.dims[src_axis[0]], v.dims[src_axis[1]], v.dims[src_axis[2]]];
    let spacing = [v.spacing[src_axis[0]], v.spacing[src_axis[1]], v.spacing[src_axis[2]]];
    let mut order = Vec::with_capacity(v.len());
    let mut src = [0usize; 3];
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                for (a, &c) in [i, j, k].iter().enumerate() {
                    src[src_axis[a]] = if flip[a] { dims[a] - 1 - c } else { c };
                }
                order.push(v.index(src[0], src[1], src[2]));
            }
        }
    }
    Volume {
        dims,
        spacing,
        orientation: Orientation::RAS,
        voxels: v.voxels.permuted(&order),
    }
}

/// Encoded bytes of a volume. `data` holds the detached payload for
/// two-file formats (Analyze `.img`, detached NRRD data file).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedVolume {
    pub header: Vec<u8>,
    pub data: Option<Vec<u8>>,
}

impl EncodedVolume {
    pub fn single(bytes: Vec<u8>) -> EncodedVolume {
        EncodedVolume {
            header: bytes,
            data: None,
        }
    }
}

/// Identifies the format from the leading bytes of the primary file.
///
/// Rules, checked in order:
/// 1. gzip magic `1F 8B`: gzip-wrapped NIfTI-1.
/// 2. `NRRD000` followed by a version digit `1`..`5`: NRRD.
/// 3. ASCII `key = value` first line and an `ElementDataFile` key: MetaImage.
/// 4. at least 348 bytes with `n+1\0` or `ni1\0` at offset 344: NIfTI-1.
/// 5. `sizeof_hdr` of 348 in either byte order: Analyze 7.5.
///
/// `filename_hint` is only consulted for logging; the byte rules are disjoint.
pub fn detect_format(bytes: &[u8], filename_hint: &str) -> Result<FormatKind> {
    if bytes.len() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B {
        return Ok(FormatKind::Nifti1);
    }
    if bytes.len() >= 8 && &bytes[..7] == b"NRRD000" && (b'1'..=b'5').contains(&bytes[7]) {
        return Ok(FormatKind::Nrrd);
    }
    if metaimage::looks_like(bytes) {
        return Ok(FormatKind::MetaImage);
    }
    if bytes.len() >= 348 {
        let magic = &bytes[344..348];
        if magic == b"n+1\0" || magic == b"ni1\0" {
            return Ok(FormatKind::Nifti1);
        }
        if binhdr::detect_endianness(bytes).is_some() {
            return Ok(FormatKind::Analyze75);
        }
    }
    log::debug!("no format rule matched {filename_hint}");
    Err(Error::UnknownFormat)
}

/// Decodes a volume of the given format.
pub fn read_volume(input: &EncodedVolume, kind: FormatKind) -> Result<Volume> {
    let v = match kind {
        FormatKind::Nifti1 => nifti::read(&input.header)?,
        FormatKind::Analyze75 => {
            let img = input
                .data
                .as_deref()
                .ok_or_else(|| Error::MalformedHeader("Analyze header without .img payload".into()))?;
            analyze::read(&input.header, img)?
        }
        FormatKind::MetaImage => metaimage::read(&input.header)?,
        FormatKind::Nrrd => nrrd::read(&input.header, input.data.as_deref())?,
    };
    v.validate()?;
    Ok(v)
}

/// Encodes a volume. NRRD is written with an attached payload; use
/// [`write_nrrd_detached`] for the `.nhdr` variant.
pub fn write_volume(v: &Volume, kind: FormatKind, endian: Endianness) -> Result<EncodedVolume> {
    v.validate()?;
    if matches!(kind, FormatKind::Nifti1 | FormatKind::Analyze75) {
        binhdr::check_dims(v.dims)?;
    }
    if kind == FormatKind::Analyze75 && !v.orientation.is_canonical() {
        return Err(Error::BadInput(format!(
            "Analyze 7.5 stores RAS volumes only, got {}",
            v.orientation
        )));
    }
    Ok(match kind {
        FormatKind::Nifti1 => EncodedVolume::single(nifti::write(v, endian)),
        FormatKind::Analyze75 => {
            let (hdr, img) = analyze::write(v, endian);
            EncodedVolume {
                header: hdr,
                data: Some(img),
            }
        }
        FormatKind::MetaImage => EncodedVolume::single(metaimage::write(v, endian)),
        FormatKind::Nrrd => EncodedVolume::single(nrrd::write(v, endian, None, false)),
    })
}

/// Gzip-wrapped `.nii.gz` bytes.
pub fn write_nifti_gz(v: &Volume, endian: Endianness) -> Result<Vec<u8>> {
    v.validate()?;
    nifti::write_gz(v, endian)
}

/// Detached NRRD: header naming `data_file`, plus the raw payload.
pub fn write_nrrd_detached(v: &Volume, endian: Endianness, data_file: &str) -> Result<EncodedVolume> {
    v.validate()?;
    Ok(EncodedVolume {
        header: nrrd::write(v, endian, Some(data_file), false),
        data: Some(v.voxels.to_bytes(endian)),
    })
}

/// Attached NRRD with `encoding: gzip`.
pub fn write_nrrd_gzip(v: &Volume, endian: Endianness) -> Result<Vec<u8>> {
    v.validate()?;
    Ok(nrrd::write(v, endian, None, true))
}

/// True for file names whose extension marks a primary volume file.
pub fn is_volume_path(path: &Path) -> bool {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    [".nii", ".nii.gz", ".hdr", ".mha", ".nhdr", ".nrrd"]
        .iter()
        .any(|ext| name.ends_with(ext))
}

/// Reads a volume file, resolving companion files (`.img` next to an
/// Analyze `.hdr`, the data file named by a detached NRRD header).
pub fn load_volume(path: &Path) -> Result<Volume> {
    load_volume_inner(path).map_err(|e| e.at(path))
}

fn load_volume_inner(path: &Path) -> Result<Volume> {
    let header = std::fs::read(path)?;
    let hint = path.to_string_lossy();
    let kind = detect_format(&header, &hint)?;
    let data = match kind {
        FormatKind::Analyze75 => Some(std::fs::read(path.with_extension("img"))?),
        FormatKind::Nrrd => match nrrd::data_file_name(&header)? {
            Some(name) => {
                let p = path.parent().unwrap_or(Path::new(".")).join(name);
                Some(std::fs::read(p)?)
            }
            None => None,
        },
        _ => None,
    };
    read_volume(&EncodedVolume { header, data }, kind)
}

/// Writes a volume next to `path`, creating companion files as needed.
/// Returns the paths written. A `.nhdr` extension selects detached NRRD and
/// a `.gz` suffix selects gzip NIfTI.
pub fn save_volume(path: &Path, v: &Volume, kind: FormatKind, endian: Endianness) -> Result<Vec<PathBuf>> {
    let name = path.to_string_lossy().to_ascii_lowercase();
    let mut written = vec![path.to_path_buf()];
    if kind == FormatKind::Nifti1 && name.ends_with(".gz") {
        std::fs::write(path, write_nifti_gz(v, endian)?)?;
        return Ok(written);
    }
    if kind == FormatKind::Nrrd && name.ends_with(".nhdr") {
        let raw = path.with_extension("raw");
        let raw_name = raw.file_name().unwrap().to_string_lossy().into_owned();
        let enc = write_nrrd_detached(v, endian, &raw_name)?;
        std::fs::write(path, enc.header)?;
        std::fs::write(&raw, enc.data.unwrap())?;
        written.push(raw);
        return Ok(written);
    }
    let enc = write_volume(v, kind, endian)?;
    std::fs::write(path, &enc.header)?;
    if let Some(data) = enc.data {
        let img = path.with_extension("img");
        std::fs::write(&img, data)?;
        written.push(img);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(dims: [usize; 3], orientation: Orientation) -> Volume {
        let n = dims.iter().product::<usize>();
        Volume::new(
            dims,
            [1.0, 2.0, 3.0],
            orientation,
            VoxelData::I16((0..n as i16).collect()),
        )
        .unwrap()
    }

    #[test]
    fn canonical_is_unchanged() {
        let v = labeled([2, 3, 4], Orientation::RAS);
        assert_eq!(reorient_canonical(&v), v);
    }

    #[test]
    fn ars_swaps_x_and_y() {
        use AxisCode::*;
        let v = labeled([2, 3, 4], Orientation([A, R, S]));
        let r = reorient_canonical(&v);
        assert_eq!(r.dims, [3, 2, 4]);
        assert_eq!(r.spacing, [2.0, 1.0, 3.0]);
        for k in 0..4 {
            for j in 0..3 {
                for i in 0..2 {
                    assert_eq!(v.value(i, j, k), r.value(j, i, k));
                }
            }
        }
    }

    #[test]
    fn flips_negative_axes() {
        use AxisCode::*;
        let v = labeled([2, 3, 4], Orientation([L, P, I]));
        let r = reorient_canonical(&v);
        assert_eq!(r.dims, [2, 3, 4]);
        assert_eq!(r.value(0, 0, 0), v.value(1, 2, 3));
        assert_eq!(r.value(1, 2, 3), v.value(0, 0, 0));
    }

    #[test]
    fn reorient_is_idempotent() {
        use AxisCode::*;
        let v = labeled([2, 3, 4], Orientation([S, L, A]));
        let once = reorient_canonical(&v);
        assert_eq!(reorient_canonical(&once), once);
    }

    #[test]
    fn orientation_from_directions() {
        use AxisCode::*;
        for o in [Orientation([A, R, S]), Orientation([L, I, P]), Orientation::RAS] {
            assert_eq!(Orientation::from_direction_columns(o.direction_columns()).unwrap(), o);
        }
        let oblique = [[0.9, 0.1, 0.0], [-0.2, 0.95, 0.1], [0.0, 0.3, -0.9]];
        assert_eq!(
            Orientation::from_direction_columns(oblique).unwrap(),
            Orientation([R, A, I])
        );
    }

    #[test]
    fn invalid_orientation_rejected() {
        use AxisCode::*;
        let err = Volume::new([1, 1, 1], [1.0; 3], Orientation([R, L, S]), VoxelData::U8(vec![0]));
        assert!(matches!(err, Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn unknown_format() {
        assert!(matches!(
            detect_format(b"hello world", "x.bin"),
            Err(Error::UnknownFormat)
        ));
        assert!(matches!(detect_format(&[0u8; 400], "x.bin"), Err(Error::UnknownFormat)));
    }
}
