use std::path::Path;

use nbad::volume::{
    load_volume, reorient_canonical, save_volume, AxisCode, Endianness, FormatKind, Orientation, Volume, VoxelData,
};
use nbad::Error;

fn lps() -> Orientation {
    Orientation([AxisCode::L, AxisCode::P, AxisCode::S])
}

fn ras() -> Orientation {
    Orientation([AxisCode::R, AxisCode::A, AxisCode::S])
}

fn ramp(orientation: Orientation) -> Volume {
    let dims = [5, 4, 3];
    let n = dims.iter().product::<usize>();
    let voxels = VoxelData::I16((0..n as i16).map(|i| i * 7 - 40).collect());
    Volume::new(dims, [1.0, 1.5, 2.0], orientation, voxels).unwrap()
}

fn roundtrip(dir: &Path, name: &str, v: &Volume, kind: FormatKind, endian: Endianness) -> Volume {
    let path = dir.join(name);
    let written = save_volume(&path, v, kind, endian).unwrap();
    for p in &written {
        assert!(p.exists(), "{} missing", p.display());
    }
    load_volume(&path).unwrap()
}

#[test]
fn every_format_roundtrips_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("a.nii", FormatKind::Nifti1, lps()),
        ("b.nii.gz", FormatKind::Nifti1, lps()),
        ("c.hdr", FormatKind::Analyze75, ras()),
        ("d.mha", FormatKind::MetaImage, lps()),
        ("e.nrrd", FormatKind::Nrrd, lps()),
        ("f.nhdr", FormatKind::Nrrd, lps()),
    ];
    for endian in [Endianness::Little, Endianness::Big] {
        for (name, kind, o) in cases {
            let v = ramp(o);
            let name = format!("{endian:?}-{name}");
            let back = roundtrip(dir.path(), &name, &v, kind, endian);
            assert_eq!(back, v, "{name}");
        }
    }
}

#[test]
fn companion_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let v = ramp(ras());
    let hdr = save_volume(&dir.path().join("x.hdr"), &v, FormatKind::Analyze75, Endianness::Little).unwrap();
    assert!(hdr.iter().any(|p| p.extension().unwrap() == "img"));
    let nhdr = save_volume(&dir.path().join("y.nhdr"), &v, FormatKind::Nrrd, Endianness::Little).unwrap();
    assert!(nhdr.iter().any(|p| p.extension().unwrap() == "raw"));

    std::fs::remove_file(dir.path().join("x.img")).unwrap();
    let err = load_volume(&dir.path().join("x.hdr")).unwrap_err();
    assert!(matches!(err.root(), Error::Io(_)), "{err}");
}

#[test]
fn reorientation_agrees_across_formats() {
    let dir = tempfile::tempdir().unwrap();
    let v = ramp(lps());
    let want = reorient_canonical(&v);
    for (name, kind) in [
        ("p.nii", FormatKind::Nifti1),
        ("q.mha", FormatKind::MetaImage),
        ("r.nrrd", FormatKind::Nrrd),
    ] {
        let back = roundtrip(dir.path(), name, &v, kind, Endianness::Little);
        assert_eq!(reorient_canonical(&back), want, "{name}");
    }
}

#[test]
fn truncated_payload_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.nii");
    save_volume(&path, &ramp(lps()), FormatKind::Nifti1, Endianness::Little).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
    let err = load_volume(&path).unwrap_err();
    assert!(matches!(err.root(), Error::TruncatedFile { .. }), "{err}");
    assert!(err.to_string().contains("t.nii"));
}

#[test]
fn garbage_is_unknown_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.nii");
    std::fs::write(&path, b"this is not a volume at all").unwrap();
    let err = load_volume(&path).unwrap_err();
    assert_eq!(err.root().code(), "UnknownFormat");
}

#[test]
fn bad_nrrd_header_is_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.nrrd");
    std::fs::write(
        &path,
        b"NRRD0004\ntype: short\ndimension: 3\nsizes: 2 2\nencoding: raw\n\n",
    )
    .unwrap();
    let err = load_volume(&path).unwrap_err();
    assert_eq!(err.root().code(), "MalformedHeader", "{err}");
}

#[test]
fn analyze_rejects_non_ras() {
    let dir = tempfile::tempdir().unwrap();
    let err = save_volume(
        &dir.path().join("z.hdr"),
        &ramp(lps()),
        FormatKind::Analyze75,
        Endianness::Little,
    )
    .unwrap_err();
    assert_eq!(err.code(), "BadInput");
}
