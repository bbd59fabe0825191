//! Writes one small volume in every supported format and reads it back.
//!
//! ```text
//! cargo run --example volume_roundtrip
//! ```

use nbad::volume::{
    load_volume, reorient_canonical, save_volume, AxisCode, Endianness, FormatKind, Orientation, Volume, VoxelData,
};

fn main() -> nbad::Result<()> {
    let dims = [6, 5, 4];
    let n = dims.iter().product::<usize>();
    let ras = Orientation([AxisCode::R, AxisCode::A, AxisCode::S]);
    let lps = Orientation([AxisCode::L, AxisCode::P, AxisCode::S]);
    let voxels = VoxelData::F32((0..n).map(|i| i as f32 * 0.25).collect());

    let dir = tempfile::tempdir()?;
    let cases = [
        ("scan.nii", FormatKind::Nifti1, lps),
        ("scan.nii.gz", FormatKind::Nifti1, lps),
        ("scan.hdr", FormatKind::Analyze75, ras),
        ("scan.mha", FormatKind::MetaImage, lps),
        ("scan.nrrd", FormatKind::Nrrd, lps),
        ("detached.nhdr", FormatKind::Nrrd, lps),
    ];
    for (name, kind, orientation) in cases {
        let v = Volume::new(dims, [1.0, 1.0, 2.5], orientation, voxels.clone())?;
        let path = dir.path().join(name);
        let files = save_volume(&path, &v, kind, Endianness::Big)?;
        let back = load_volume(&path)?;
        let canon = reorient_canonical(&back);
        println!(
            "{name:14} {} file(s), {} {:?} -> {} {:?}, identical: {}",
            files.len(),
            back.orientation,
            back.dims,
            canon.orientation,
            canon.dims,
            back == v
        );
    }
    Ok(())
}
