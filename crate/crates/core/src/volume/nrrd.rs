//! NRRD, attached (`.nrrd`) or detached (`.nhdr` + data file), with raw or
//! gzip encoding.

use std::io::{Read, Write};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{ElementType, Endianness, Orientation, Volume, VoxelData};
use crate::{Error, Result};

struct Header<'a> {
    fields: Vec<(String, String)>,
    /// Bytes following the blank line that ends the header.
    rest: &'a [u8],
}

impl Header<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header<'_>> {
    let mut pos = 0;
    let mut fields = Vec::new();
    let mut first = true;
    loop {
        let end = match bytes[pos..].iter().position(|&b| b == b'\n') {
            Some(i) => pos + i,
            None if pos < bytes.len() => bytes.len(),
            None => break,
        };
        let line = std::str::from_utf8(&bytes[pos..end])
            .map_err(|_| Error::MalformedHeader("non-UTF-8 NRRD header".into()))?
            .trim_end_matches('\r');
        pos = (end + 1).min(bytes.len());
        if first {
            let ok = line.len() == 8 && line.starts_with("NRRD000") && matches!(line.as_bytes()[7], b'1'..=b'5');
            if !ok {
                return Err(Error::MalformedHeader(format!("bad NRRD magic `{line}`")));
            }
            first = false;
            continue;
        }
        if line.is_empty() {
            break;
        }
        if line.starts_with('#') || line.contains(":=") {
            continue;
        }
        let (k, v) = line
            .split_once(": ")
            .ok_or_else(|| Error::MalformedHeader(format!("bad NRRD field `{line}`")))?;
        fields.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
        if end >= bytes.len() {
            break;
        }
    }
    Ok(Header {
        fields,
        rest: &bytes[pos..],
    })
}

/// Name of the detached data file, if the header declares one.
pub fn data_file_name(bytes: &[u8]) -> Result<Option<String>> {
    let h = parse_header(bytes)?;
    Ok(h.get("data file").or_else(|| h.get("datafile")).map(str::to_string))
}

fn element_type(name: &str) -> Result<ElementType> {
    match name {
        "uchar" | "unsigned char" | "uint8" | "uint8_t" => Ok(ElementType::U8),
        "short" | "short int" | "signed short" | "signed short int" | "int16" | "int16_t" => Ok(ElementType::I16),
        "float" => Ok(ElementType::F32),
        other => Err(Error::UnsupportedElementType(other.to_string())),
    }
}

fn parse_vector(s: &str) -> Result<[f64; 3]> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| Error::MalformedHeader(format!("bad space direction `{s}`")))?;
    let vals: Vec<f64> = inner
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::MalformedHeader(format!("bad space direction `{s}`")))?;
    if vals.len() != 3 {
        return Err(Error::MalformedHeader(format!("space direction `{s}` is not 3-D")));
    }
    Ok([vals[0], vals[1], vals[2]])
}

/// Sign flips taking a vector in the named space to RAS.
fn space_to_ras(space: Option<&str>) -> Result<[f64; 3]> {
    Ok(match space.map(|s| s.to_ascii_lowercase()) {
        None => [1.0, 1.0, 1.0],
        Some(s) => match s.as_str() {
            "right-anterior-superior" | "ras" | "scanner-xyz" | "3d-right-handed" => [1.0, 1.0, 1.0],
            "left-anterior-superior" | "las" => [-1.0, 1.0, 1.0],
            "left-posterior-superior" | "lps" => [-1.0, -1.0, 1.0],
            other => return Err(Error::MalformedHeader(format!("unsupported space `{other}`"))),
        },
    })
}

pub fn read(bytes: &[u8], detached: Option<&[u8]>) -> Result<Volume> {
    let h = parse_header(bytes)?;
    let req = |k: &str| {
        h.get(k)
            .ok_or_else(|| Error::MalformedHeader(format!("missing NRRD field `{k}`")))
    };
    if req("dimension")? != "3" {
        return Err(Error::MalformedHeader(format!(
            "dimension {}; only 3 is supported",
            req("dimension")?
        )));
    }
    let ty = element_type(req("type")?)?;
    let sizes: Vec<usize> = req("sizes")?
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::MalformedHeader("bad sizes".into()))?;
    if sizes.len() != 3 {
        return Err(Error::MalformedHeader("sizes must have 3 entries".into()));
    }
    let dims = [sizes[0], sizes[1], sizes[2]];
    let (spacing, orientation) = if let Some(dirs) = h.get("space directions") {
        let flips = space_to_ras(h.get("space"))?;
        let vectors: Vec<[f64; 3]> = dirs
            .split(") (")
            .map(|p| {
                let p = p.trim();
                let p = if p.starts_with('(') {
                    p.to_string()
                } else {
                    format!("({p}")
                };
                let p = if p.ends_with(')') { p } else { format!("{p})") };
                parse_vector(&p)
            })
            .collect::<Result<_>>()?;
        if vectors.len() != 3 {
            return Err(Error::MalformedHeader("space directions must have 3 vectors".into()));
        }
        let mut cols = [[0.0; 3]; 3];
        let mut spacing = [0.0; 3];
        for (j, v) in vectors.iter().enumerate() {
            spacing[j] = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for a in 0..3 {
                cols[j][a] = v[a] * flips[a];
            }
        }
        (spacing, Orientation::from_direction_columns(cols)?)
    } else if let Some(sp) = h.get("spacings") {
        let s: Vec<f64> = sp
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::MalformedHeader("bad spacings".into()))?;
        if s.len() != 3 {
            return Err(Error::MalformedHeader("spacings must have 3 entries".into()));
        }
        ([s[0], s[1], s[2]], Orientation::RAS)
    } else {
        ([1.0; 3], Orientation::RAS)
    };
    let endian = match h.get("endian") {
        Some("little") => Endianness::Little,
        Some("big") => Endianness::Big,
        Some(other) => return Err(Error::MalformedHeader(format!("endian `{other}`"))),
        None if ty.size() == 1 => Endianness::Little,
        None => return Err(Error::MalformedHeader("missing endian for multi-byte type".into())),
    };
    let has_data_file = h.get("data file").or_else(|| h.get("datafile")).is_some();
    let data: &[u8] = if has_data_file {
        detached.ok_or_else(|| Error::MalformedHeader("detached header without data file bytes".into()))?
    } else {
        h.rest
    };
    let skip: usize = match h.get("byte skip") {
        Some(s) => s
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("byte skip `{s}`")))?,
        None => 0,
    };
    let decoded;
    let raw: &[u8] = match h.get("encoding") {
        Some("raw") => data,
        Some("gzip") | Some("gz") => {
            let mut out = Vec::new();
            GzDecoder::new(data)
                .read_to_end(&mut out)
                .map_err(|e| Error::MalformedHeader(format!("gzip: {e}")))?;
            decoded = out;
            &decoded
        }
        Some(other) => return Err(Error::MalformedHeader(format!("encoding `{other}` not supported"))),
        None => return Err(Error::MalformedHeader("missing NRRD field `encoding`".into())),
    };
    let raw = raw.get(skip..).unwrap_or(&[]);
    let voxels = VoxelData::from_bytes(raw, ty, dims.iter().product(), endian)?;
    Volume::new(dims, spacing, orientation, voxels)
}

pub fn write(v: &Volume, endian: Endianness, data_file: Option<&str>, gzip: bool) -> Vec<u8> {
    let ty = match v.element_type() {
        ElementType::U8 => "uchar",
        ElementType::I16 => "short",
        ElementType::F32 => "float",
    };
    let cols = v.orientation.direction_columns();
    let dirs: Vec<String> = cols
        .iter()
        .zip(v.spacing)
        .map(|(c, s)| format!("({},{},{})", c[0] * s + 0.0, c[1] * s + 0.0, c[2] * s + 0.0))
        .collect();
    let mut h = String::from("NRRD0004\n");
    h.push_str(&format!("type: {ty}\n"));
    h.push_str("dimension: 3\n");
    h.push_str("space: right-anterior-superior\n");
    h.push_str(&format!("sizes: {} {} {}\n", v.dims[0], v.dims[1], v.dims[2]));
    h.push_str(&format!("space directions: {}\n", dirs.join(" ")));
    h.push_str("kinds: domain domain domain\n");
    if v.element_type().size() > 1 {
        let e = if endian == Endianness::Big { "big" } else { "little" };
        h.push_str(&format!("endian: {e}\n"));
    }
    h.push_str(if gzip { "encoding: gzip\n" } else { "encoding: raw\n" });
    if let Some(name) = data_file {
        h.push_str(&format!("data file: {name}\n"));
    }
    h.push('\n');
    let mut out = h.into_bytes();
    if data_file.is_none() {
        let payload = v.voxels.to_bytes(endian);
        if gzip {
            let mut enc = GzEncoder::new(Vec::new(), Compression::default());
            enc.write_all(&payload).expect("in-memory gzip");
            out.extend(enc.finish().expect("in-memory gzip"));
        } else {
            out.extend(payload);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::AxisCode;

    fn vol() -> Volume {
        Volume::new(
            [2, 2, 2],
            [0.5, 1.0, 2.5],
            Orientation([AxisCode::L, AxisCode::S, AxisCode::A]),
            VoxelData::U8((1..=8).collect()),
        )
        .unwrap()
    }

    #[test]
    fn attached_roundtrip() {
        let bytes = write(&vol(), Endianness::Little, None, false);
        assert!(bytes.starts_with(b"NRRD0004\n"));
        assert!(!String::from_utf8_lossy(&bytes).contains("endian"));
        assert_eq!(read(&bytes, None).unwrap(), vol());
    }

    #[test]
    fn gzip_encoding_roundtrip() {
        let bytes = write(&vol(), Endianness::Big, None, true);
        assert_eq!(read(&bytes, None).unwrap(), vol());
    }

    #[test]
    fn detached_needs_data() {
        let hdr = write(&vol(), Endianness::Little, Some("v.raw"), false);
        assert_eq!(data_file_name(&hdr).unwrap().as_deref(), Some("v.raw"));
        assert!(matches!(read(&hdr, None), Err(Error::MalformedHeader(_))));
        let data = vol().voxels.to_bytes(Endianness::Little);
        assert_eq!(read(&hdr, Some(&data)).unwrap(), vol());
    }

    #[test]
    fn spacings_field_and_lps_space() {
        let text = b"NRRD0005\n# comment\ntype: short\ndimension: 3\nsizes: 1 1 2\nspacings: 1 2 3\nendian: big\nencoding: raw\n\n\x00\x05\xff\xfe";
        let v = read(text, None).unwrap();
        assert_eq!(v.spacing, [1.0, 2.0, 3.0]);
        assert_eq!(v.voxels, VoxelData::I16(vec![5, -2]));

        let lps = b"NRRD0004\ntype: uchar\ndimension: 3\nspace: left-posterior-superior\nsizes: 1 1 1\nspace directions: (1,0,0) (0,1,0) (0,0,1)\nencoding: raw\n\n\x09";
        let v = read(lps, None).unwrap();
        assert_eq!(v.orientation, Orientation([AxisCode::L, AxisCode::P, AxisCode::S]));
    }

    #[test]
    fn missing_endian_for_float() {
        let text = b"NRRD0004\ntype: float\ndimension: 3\nsizes: 1 1 1\nencoding: raw\n\n\x00\x00\x00\x00";
        assert!(matches!(read(text, None), Err(Error::MalformedHeader(_))));
    }
}
