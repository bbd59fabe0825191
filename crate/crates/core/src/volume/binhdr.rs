//! The 348-byte binary header layout shared by Analyze 7.5 and NIfTI-1.

use super::{ElementType, Endianness};
use crate::{Error, Result};

pub const HEADER_SIZE: usize = 348;

pub const OFF_DIM: usize = 40;
pub const OFF_DATATYPE: usize = 70;
pub const OFF_BITPIX: usize = 72;
pub const OFF_PIXDIM: usize = 76;
pub const OFF_VOX_OFFSET: usize = 108;

/// Byte order in which `sizeof_hdr` reads as 348, if any.
pub fn detect_endianness(bytes: &[u8]) -> Option<Endianness> {
    if bytes.len() < 4 {
        return None;
    }
    let raw = [bytes[0], bytes[1], bytes[2], bytes[3]];
    if i32::from_le_bytes(raw) == HEADER_SIZE as i32 {
        Some(Endianness::Little)
    } else if i32::from_be_bytes(raw) == HEADER_SIZE as i32 {
        Some(Endianness::Big)
    } else {
        None
    }
}

pub fn datatype_code(ty: ElementType) -> i16 {
    match ty {
        ElementType::U8 => 2,
        ElementType::I16 => 4,
        ElementType::F32 => 16,
    }
}

pub fn element_type(code: i16) -> Result<ElementType> {
    match code {
        2 => Ok(ElementType::U8),
        4 => Ok(ElementType::I16),
        16 => Ok(ElementType::F32),
        other => Err(Error::UnsupportedElementType(format!("datatype code {other}"))),
    }
}

pub struct HeaderReader<'a> {
    pub bytes: &'a [u8],
    pub endian: Endianness,
}

impl<'a> HeaderReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Result<Self> {
        if bytes.len() < HEADER_SIZE {
            return Err(Error::TruncatedFile {
                expected: HEADER_SIZE,
                found: bytes.len(),
            });
        }
        let endian = detect_endianness(bytes).ok_or_else(|| Error::MalformedHeader("sizeof_hdr is not 348".into()))?;
        Ok(HeaderReader { bytes, endian })
    }

    fn take<const N: usize>(&self, off: usize) -> [u8; N] {
        let mut b = [0u8; N];
        b.copy_from_slice(&self.bytes[off..off + N]);
        if self.endian == Endianness::Big {
            b.reverse();
        }
        b
    }

    pub fn i16(&self, off: usize) -> i16 {
        i16::from_le_bytes(self.take(off))
    }

    pub fn f32(&self, off: usize) -> f32 {
        f32::from_le_bytes(self.take(off))
    }

    pub fn dim(&self, i: usize) -> i16 {
        self.i16(OFF_DIM + 2 * i)
    }

    pub fn pixdim(&self, i: usize) -> f32 {
        self.f32(OFF_PIXDIM + 4 * i)
    }

    /// Spatial dims, element type and spacing common to both formats.
    /// Dimensionality above three keeps only the first 3-D frame.
    pub fn geometry(&self) -> Result<([usize; 3], ElementType, [f64; 3])> {
        let ndim = self.dim(0);
        if !(1..=7).contains(&ndim) {
            return Err(Error::MalformedHeader(format!("dim[0] = {ndim}")));
        }
        if ndim > 3 {
            let extra: i64 = (4..=ndim as usize).map(|i| self.dim(i).max(1) as i64).product();
            if extra > 1 {
                log::warn!("{ndim}-D volume: reading the first 3-D frame only");
            }
        }
        let mut dims = [1usize; 3];
        let mut spacing = [1.0f64; 3];
        for i in 0..3 {
            if i < ndim as usize {
                let d = self.dim(i + 1);
                if d <= 0 {
                    return Err(Error::MalformedHeader(format!("dim[{}] = {d}", i + 1)));
                }
                dims[i] = d as usize;
                let p = self.pixdim(i + 1).abs() as f64;
                if !p.is_finite() || p <= 0.0 {
                    return Err(Error::MalformedHeader(format!("pixdim[{}] = {p}", i + 1)));
                }
                spacing[i] = p;
            }
        }
        let ty = element_type(self.i16(OFF_DATATYPE))?;
        let bitpix = self.i16(OFF_BITPIX);
        if bitpix as usize != ty.size() * 8 {
            return Err(Error::MalformedHeader(format!(
                "bitpix {bitpix} disagrees with datatype"
            )));
        }
        Ok((dims, ty, spacing))
    }
}

pub struct HeaderWriter {
    pub bytes: Vec<u8>,
    pub endian: Endianness,
}

impl HeaderWriter {
    pub fn new(endian: Endianness) -> Self {
        let mut w = HeaderWriter {
            bytes: vec![0u8; HEADER_SIZE],
            endian,
        };
        w.i32(0, HEADER_SIZE as i32);
        w
    }

    fn put(&mut self, off: usize, mut le: Vec<u8>) {
        if self.endian == Endianness::Big {
            le.reverse();
        }
        self.bytes[off..off + le.len()].copy_from_slice(&le);
    }

    pub fn i16(&mut self, off: usize, v: i16) {
        self.put(off, v.to_le_bytes().to_vec());
    }

    pub fn i32(&mut self, off: usize, v: i32) {
        self.put(off, v.to_le_bytes().to_vec());
    }

    pub fn f32(&mut self, off: usize, v: f32) {
        self.put(off, v.to_le_bytes().to_vec());
    }

    pub fn raw(&mut self, off: usize, b: &[u8]) {
        self.bytes[off..off + b.len()].copy_from_slice(b);
    }

    pub fn geometry(&mut self, dims: [usize; 3], ty: ElementType, spacing: [f64; 3]) {
        self.i16(OFF_DIM, 3);
        for (i, &d) in dims.iter().enumerate() {
            self.i16(OFF_DIM + 2 * (i + 1), d as i16);
        }
        for i in 4..8 {
            self.i16(OFF_DIM + 2 * i, 1);
        }
        self.i16(OFF_DATATYPE, datatype_code(ty));
        self.i16(OFF_BITPIX, (ty.size() * 8) as i16);
        self.f32(OFF_PIXDIM, 1.0);
        for (i, &s) in spacing.iter().enumerate() {
            self.f32(OFF_PIXDIM + 4 * (i + 1), s as f32);
        }
    }
}

/// Header dims must fit the signed 16-bit dim fields.
pub fn check_dims(dims: [usize; 3]) -> Result<()> {
    if dims.iter().any(|&d| d > i16::MAX as usize) {
        return Err(Error::BadInput(format!("dims {dims:?} exceed 32767")));
    }
    Ok(())
}
