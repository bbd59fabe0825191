//! MetaImage single-file `.mha` with `ElementDataFile = LOCAL`.
//!
//! `TransformMatrix` holds the direction cosines of the storage axes one
//! axis after another, in the LPS world frame used by ITK.

use super::{ElementType, Endianness, Orientation, Volume, VoxelData};
use crate::{Error, Result};

const MAX_HEADER: usize = 64 * 1024;

pub fn looks_like(bytes: &[u8]) -> bool {
    let head = &bytes[..bytes.len().min(MAX_HEADER)];
    let first_line = head.split(|&b| b == b'\n').next().unwrap_or(&[]);
    let Ok(line) = std::str::from_utf8(first_line) else {
        return false;
    };
    let Some((key, _)) = line.split_once('=') else {
        return false;
    };
    let key = key.trim();
    !key.is_empty()
        && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && head.windows(15).any(|w| w == b"ElementDataFile")
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(Error::MalformedHeader(format!("{key} = {v}"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::MalformedHeader(format!("{key}: cannot parse `{t}`")))
        })
        .collect()
}

pub fn read(bytes: &[u8]) -> Result<Volume> {
    let mut pos = 0;
    let mut dims: Option<Vec<usize>> = None;
    let mut spacing: Option<Vec<f64>> = None;
    let mut ty: Option<ElementType> = None;
    let mut endian = Endianness::Little;
    let mut matrix: Option<Vec<f64>> = None;
    let mut payload_start = None;
    while pos < bytes.len() {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i)
            .ok_or_else(|| Error::MalformedHeader("header ends before ElementDataFile".into()))?;
        let line = std::str::from_utf8(&bytes[pos..end])
            .map_err(|_| Error::MalformedHeader("non-UTF-8 header line".into()))?
            .trim_end_matches('\r');
        pos = end + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::MalformedHeader(format!("line without `=`: {line}")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "ObjectType" if value != "Image" => return Err(Error::MalformedHeader(format!("ObjectType = {value}"))),
            "NDims" if value != "3" => {
                return Err(Error::MalformedHeader(format!("NDims = {value}; only 3 is supported")))
            }
            "DimSize" => dims = Some(parse_list(key, value)?),
            "ElementSpacing" => spacing = Some(parse_list(key, value)?),
            "TransformMatrix" | "Orientation" | "Rotation" => matrix = Some(parse_list(key, value)?),
            "BinaryDataByteOrderMSB" | "ElementByteOrderMSB" => {
                endian = if parse_bool(key, value)? {
                    Endianness::Big
                } else {
                    Endianness::Little
                }
            }
            "CompressedData" if parse_bool(key, value)? => {
                return Err(Error::MalformedHeader("compressed MetaImage is not supported".into()))
            }
            "ElementNumberOfChannels" if value != "1" => {
                return Err(Error::MalformedHeader(format!("{value} channels per voxel")))
            }
            "ElementType" => {
                ty = Some(match value {
                    "MET_UCHAR" => ElementType::U8,
                    "MET_SHORT" => ElementType::I16,
                    "MET_FLOAT" => ElementType::F32,
                    other => return Err(Error::UnsupportedElementType(other.to_string())),
                })
            }
            "ElementDataFile" => {
                if value != "LOCAL" {
                    return Err(Error::MalformedHeader(format!(
                        "ElementDataFile = {value}; only LOCAL is supported"
                    )));
                }
                payload_start = Some(pos);
                break;
            }
            _ => {}
        }
    }
    let payload_start = payload_start.ok_or_else(|| Error::MalformedHeader("missing ElementDataFile".into()))?;
    let dims = dims.ok_or_else(|| Error::MalformedHeader("missing DimSize".into()))?;
    if dims.len() != 3 {
        return Err(Error::MalformedHeader(format!("DimSize has {} entries", dims.len())));
    }
    let dims = [dims[0], dims[1], dims[2]];
    let spacing = match spacing {
        Some(s) if s.len() == 3 => [s[0], s[1], s[2]],
        Some(s) => {
            return Err(Error::MalformedHeader(format!(
                "ElementSpacing has {} entries",
                s.len()
            )))
        }
        None => [1.0; 3],
    };
    let ty = ty.ok_or_else(|| Error::MalformedHeader("missing ElementType".into()))?;
    let orientation = match matrix {
        Some(m) if m.len() == 9 => {
            let mut cols = [[0.0; 3]; 3];
            for (j, col) in cols.iter_mut().enumerate() {
                // LPS -> RAS
                *col = [-m[3 * j], -m[3 * j + 1], m[3 * j + 2]];
            }
            Orientation::from_direction_columns(cols)?
        }
        Some(m) => {
            return Err(Error::MalformedHeader(format!(
                "TransformMatrix has {} entries",
                m.len()
            )))
        }
        None => Orientation::RAS,
    };
    let voxels = VoxelData::from_bytes(&bytes[payload_start..], ty, dims.iter().product(), endian)?;
    Volume::new(dims, spacing, orientation, voxels)
}

pub fn write(v: &Volume, endian: Endianness) -> Vec<u8> {
    let cols = v.orientation.direction_columns();
    let matrix: Vec<String> = cols
        .iter()
        .flat_map(|c| [-c[0], -c[1], c[2]])
        .map(|x| format!("{}", x + 0.0))
        .collect();
    let element = match v.element_type() {
        ElementType::U8 => "MET_UCHAR",
        ElementType::I16 => "MET_SHORT",
        ElementType::F32 => "MET_FLOAT",
    };
    let msb = if endian == Endianness::Big { "True" } else { "False" };
    let header = format!(
        "ObjectType = Image\n\
         NDims = 3\n\
         BinaryData = True\n\
         BinaryDataByteOrderMSB = {msb}\n\
         CompressedData = False\n\
         TransformMatrix = {}\n\
         Offset = 0 0 0\n\
         ElementSpacing = {} {} {}\n\
         DimSize = {} {} {}\n\
         ElementType = {element}\n\
         ElementDataFile = LOCAL\n",
        matrix.join(" "),
        v.spacing[0],
        v.spacing[1],
        v.spacing[2],
        v.dims[0],
        v.dims[1],
        v.dims[2],
    );
    let mut out = header.into_bytes();
    out.extend(v.voxels.to_bytes(endian));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vol() -> Volume {
        Volume::new(
            [2, 2, 2],
            [1.0, 1.0, 1.0],
            Orientation::RAS,
            VoxelData::F32(vec![0.5, 1.5, -2.0, 3.25, 4.0, 5.0, 6.0, 7.0]),
        )
        .unwrap()
    }

    #[test]
    fn header_declares_met_float() {
        let bytes = write(&vol(), Endianness::Little);
        let text = String::from_utf8_lossy(&bytes[..bytes.len() - 32]);
        assert!(text.contains("ElementType = MET_FLOAT\n"));
        assert!(text.contains("BinaryDataByteOrderMSB = False\n"));
        assert!(looks_like(&bytes));
    }

    #[test]
    fn external_data_file_rejected() {
        let text =
            "ObjectType = Image\nNDims = 3\nDimSize = 1 1 1\nElementType = MET_UCHAR\nElementDataFile = img.raw\n";
        assert!(matches!(read(text.as_bytes()), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn unsupported_type() {
        let text =
            "ObjectType = Image\nNDims = 3\nDimSize = 1 1 1\nElementType = MET_DOUBLE\nElementDataFile = LOCAL\n";
        assert!(matches!(read(text.as_bytes()), Err(Error::UnsupportedElementType(_))));
    }

    #[test]
    fn lps_identity_matrix_reads_as_lps() {
        use crate::volume::AxisCode::*;
        let text = "ObjectType = Image\nNDims = 3\nTransformMatrix = 1 0 0 0 1 0 0 0 1\nDimSize = 1 1 1\nElementType = MET_UCHAR\nElementDataFile = LOCAL\n\x07";
        let v = read(text.as_bytes()).unwrap();
        assert_eq!(v.orientation, Orientation([L, P, S]));
    }
}
