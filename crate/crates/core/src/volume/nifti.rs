//! Single-file NIfTI-1 (`.nii`, optionally gzip-wrapped).

use std::io::{Read, Write};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::binhdr::{self, HeaderReader, HeaderWriter, HEADER_SIZE, OFF_VOX_OFFSET};
use super::{Endianness, Orientation, Volume, VoxelData};
use crate::{Error, Result};

const OFF_SCL_SLOPE: usize = 112;
const OFF_XYZT_UNITS: usize = 123;
const OFF_QFORM_CODE: usize = 252;
const OFF_SFORM_CODE: usize = 254;
const OFF_QUATERN_B: usize = 256;
const OFF_SROW_X: usize = 280;
const OFF_MAGIC: usize = 344;

/// Header plus the 4-byte extension flag.
const VOX_OFFSET: usize = 352;

pub fn read(bytes: &[u8]) -> Result<Volume> {
    if bytes.len() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B {
        let mut raw = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut raw)
            .map_err(|e| Error::MalformedHeader(format!("gzip: {e}")))?;
        return read_plain(&raw);
    }
    read_plain(bytes)
}

fn read_plain(bytes: &[u8]) -> Result<Volume> {
    let hdr = HeaderReader::new(bytes)?;
    match &bytes[OFF_MAGIC..OFF_MAGIC + 4] {
        b"n+1\0" => {}
        b"ni1\0" => {
            return Err(Error::MalformedHeader(
                "two-file NIfTI (ni1) is not supported; use single-file .nii".into(),
            ))
        }
        other => return Err(Error::MalformedHeader(format!("bad NIfTI magic {other:?}"))),
    }
    let (dims, ty, spacing) = hdr.geometry()?;
    let offset = hdr.f32(OFF_VOX_OFFSET);
    if !offset.is_finite() || offset < HEADER_SIZE as f32 {
        return Err(Error::MalformedHeader(format!("vox_offset {offset}")));
    }
    let offset = offset as usize;
    let count = dims.iter().product();
    let payload = bytes.get(offset..).unwrap_or(&[]);
    let voxels = VoxelData::from_bytes(payload, ty, count, hdr.endian)?;
    let orientation = orientation(&hdr)?;
    Volume::new(dims, spacing, orientation, voxels)
}

fn orientation(hdr: &HeaderReader) -> Result<Orientation> {
    if hdr.i16(OFF_SFORM_CODE) > 0 {
        let mut cols = [[0.0f64; 3]; 3];
        for (row, col_vals) in (0..3).map(|r| (r, OFF_SROW_X + 16 * r)) {
            for (j, col) in cols.iter_mut().enumerate() {
                col[row] = hdr.f32(col_vals + 4 * j) as f64;
            }
        }
        return Orientation::from_direction_columns(cols);
    }
    if hdr.i16(OFF_QFORM_CODE) > 0 {
        let b = hdr.f32(OFF_QUATERN_B) as f64;
        let c = hdr.f32(OFF_QUATERN_B + 4) as f64;
        let d = hdr.f32(OFF_QUATERN_B + 8) as f64;
        let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
        let qfac = if hdr.pixdim(0) < 0.0 { -1.0 } else { 1.0 };
        let r = [
            [
                a * a + b * b - c * c - d * d,
                2.0 * (b * c - a * d),
                2.0 * (b * d + a * c),
            ],
            [
                2.0 * (b * c + a * d),
                a * a + c * c - b * b - d * d,
                2.0 * (c * d - a * b),
            ],
            [
                2.0 * (b * d - a * c),
                2.0 * (c * d + a * b),
                a * a + d * d - c * c - b * b,
            ],
        ];
        let mut cols = [[0.0f64; 3]; 3];
        for (j, col) in cols.iter_mut().enumerate() {
            let s = if j == 2 { qfac } else { 1.0 };
            for (i, v) in col.iter_mut().enumerate() {
                *v = r[i][j] * s;
            }
        }
        return Orientation::from_direction_columns(cols);
    }
    Ok(Orientation::RAS)
}

pub fn write(v: &Volume, endian: Endianness) -> Vec<u8> {
    let mut h = HeaderWriter::new(endian);
    h.geometry(v.dims, v.element_type(), v.spacing);
    h.f32(OFF_VOX_OFFSET, VOX_OFFSET as f32);
    h.f32(OFF_SCL_SLOPE, 0.0);
    // millimetres
    h.raw(OFF_XYZT_UNITS, &[2]);
    h.i16(OFF_QFORM_CODE, 0);
    h.i16(OFF_SFORM_CODE, 2);
    let cols = v.orientation.direction_columns();
    for row in 0..3 {
        for (j, col) in cols.iter().enumerate() {
            h.f32(OFF_SROW_X + 16 * row + 4 * j, (col[row] * v.spacing[j]) as f32);
        }
    }
    h.raw(OFF_MAGIC, b"n+1\0");
    let mut out = h.bytes;
    out.extend_from_slice(&[0u8; VOX_OFFSET - HEADER_SIZE]);
    out.extend(v.voxels.to_bytes(endian));
    out
}

pub fn write_gz(v: &Volume, endian: Endianness) -> Result<Vec<u8>> {
    binhdr::check_dims(v.dims)?;
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(&write(v, endian))?;
    Ok(enc.finish()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{AxisCode, ElementType};

    fn cube() -> Volume {
        Volume::new(
            [3, 4, 5],
            [1.0, 1.5, 2.0],
            Orientation::RAS,
            VoxelData::F32((0..60).map(|i| i as f32 * 0.25).collect()),
        )
        .unwrap()
    }

    #[test]
    fn roundtrip_both_endians() {
        for e in Endianness::ALL {
            assert_eq!(read(&write(&cube(), e)).unwrap(), cube());
        }
    }

    #[test]
    fn gzip_roundtrip() {
        let gz = write_gz(&cube(), Endianness::Little).unwrap();
        assert_eq!(&gz[..2], &[0x1F, 0x8B]);
        assert_eq!(read(&gz).unwrap(), cube());
    }

    #[test]
    fn short_payload_is_truncated() {
        let v = Volume::new([10, 10, 10], [1.0; 3], Orientation::RAS, VoxelData::U8(vec![7; 1000])).unwrap();
        let bytes = write(&v, Endianness::Little);
        let cut = &bytes[..VOX_OFFSET + 500];
        assert!(matches!(
            read(cut),
            Err(Error::TruncatedFile {
                expected: 1000,
                found: 500
            })
        ));
    }

    #[test]
    fn two_file_magic_rejected() {
        let mut bytes = write(&cube(), Endianness::Little);
        bytes[OFF_MAGIC..OFF_MAGIC + 4].copy_from_slice(b"ni1\0");
        assert!(matches!(read(&bytes), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn unsupported_datatype() {
        let mut bytes = write(&cube(), Endianness::Little);
        // float64
        bytes[70..72].copy_from_slice(&64i16.to_le_bytes());
        bytes[72..74].copy_from_slice(&64i16.to_le_bytes());
        assert!(matches!(read(&bytes), Err(Error::UnsupportedElementType(_))));
    }

    #[test]
    fn four_d_reads_first_frame() {
        let v = cube();
        let mut bytes = write(&v, Endianness::Little);
        bytes[40..42].copy_from_slice(&4i16.to_le_bytes());
        bytes[48..50].copy_from_slice(&2i16.to_le_bytes());
        bytes.extend(v.voxels.to_bytes(Endianness::Little));
        assert_eq!(read(&bytes).unwrap(), v);
    }

    #[test]
    fn qform_orientation() {
        let v = cube();
        let mut bytes = write(&v, Endianness::Little);
        bytes[OFF_SFORM_CODE..OFF_SFORM_CODE + 2].copy_from_slice(&0i16.to_le_bytes());
        bytes[OFF_QFORM_CODE..OFF_QFORM_CODE + 2].copy_from_slice(&1i16.to_le_bytes());
        // 180 degree rotation about z: quaternion (0, 0, 0, 1) flips x and y
        bytes[OFF_QUATERN_B + 8..OFF_QUATERN_B + 12].copy_from_slice(&1f32.to_le_bytes());
        let r = read(&bytes).unwrap();
        assert_eq!(r.orientation, Orientation([AxisCode::L, AxisCode::P, AxisCode::S]));
        assert_eq!(r.element_type(), ElementType::F32);
    }

    #[test]
    fn orientation_survives_sform() {
        let mut v = cube();
        v.orientation = Orientation([AxisCode::P, AxisCode::I, AxisCode::R]);
        assert_eq!(read(&write(&v, Endianness::Big)).unwrap(), v);
    }
}
