//! Analyze 7.5 `.hdr` / `.img` pairs. The format carries no magic; byte
//! order comes from whichever interpretation makes `sizeof_hdr` equal 348.
//! Volumes are taken to be stored in RAS order.

use super::binhdr::{HeaderReader, HeaderWriter, OFF_VOX_OFFSET};
use super::{Endianness, Orientation, Volume, VoxelData};
use crate::{Error, Result};

const OFF_EXTENTS: usize = 32;
const OFF_REGULAR: usize = 38;

pub fn read(header: &[u8], img: &[u8]) -> Result<Volume> {
    let hdr = HeaderReader::new(header)?;
    if &header[344..348] == b"n+1\0" || &header[344..348] == b"ni1\0" {
        return Err(Error::MalformedHeader("NIfTI magic in Analyze header".into()));
    }
    let (dims, ty, spacing) = hdr.geometry()?;
    let offset = hdr.f32(OFF_VOX_OFFSET);
    let offset = if offset.is_finite() && offset > 0.0 {
        offset as usize
    } else {
        0
    };
    let payload = img.get(offset..).unwrap_or(&[]);
    let voxels = VoxelData::from_bytes(payload, ty, dims.iter().product(), hdr.endian)?;
    Volume::new(dims, spacing, Orientation::RAS, voxels)
}

pub fn write(v: &Volume, endian: Endianness) -> (Vec<u8>, Vec<u8>) {
    let mut h = HeaderWriter::new(endian);
    h.i32(OFF_EXTENTS, 16384);
    h.raw(OFF_REGULAR, b"r");
    h.geometry(v.dims, v.element_type(), v.spacing);
    h.f32(OFF_VOX_OFFSET, 0.0);
    (h.bytes, v.voxels.to_bytes(endian))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn big_endian_pair_roundtrip() {
        let v = Volume::new(
            [4, 3, 2],
            [0.5, 0.5, 1.25],
            Orientation::RAS,
            VoxelData::I16((0..24).map(|i| (i * 1000 - 9000) as i16).collect()),
        )
        .unwrap();
        let (hdr, img) = write(&v, Endianness::Big);
        assert_eq!(&hdr[..4], &348i32.to_be_bytes());
        assert_eq!(&img[..2], &(-9000i16).to_be_bytes());
        assert_eq!(read(&hdr, &img).unwrap(), v);
    }

    #[test]
    fn truncated_img() {
        let v = Volume::new([2, 2, 2], [1.0; 3], Orientation::RAS, VoxelData::F32(vec![1.0; 8])).unwrap();
        let (hdr, img) = write(&v, Endianness::Little);
        assert!(matches!(read(&hdr, &img[..20]), Err(Error::TruncatedFile { .. })));
    }
}
