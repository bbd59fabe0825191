//! Turns one phantom volume into the three-plane training sample and also
//! exports its central axial slice.
//!
//! ```text
//! cargo run --example slice_export -- /tmp/slices
//! ```

use std::path::PathBuf;

use nbad::dataset::{compose_sample, compute_voi, extract_slice, Plane, Sample, DEFAULT_THRESHOLD};
use nbad::harness::phantom_volume;
use nbad::volume::{export_png, reorient_canonical};

fn main() -> nbad::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "slices".into()));
    std::fs::create_dir_all(&out)?;

    let (v, _) = phantom_volume(1, 0, 64, 42)?;
    let v = reorient_canonical(&v);
    let voi = compute_voi(&v, DEFAULT_THRESHOLD);
    println!("volume {:?}, voi {voi:?}", v.dims);

    let sample = compose_sample(&v, &voi, (64, 64))?;
    std::fs::write(out.join("sample.png"), export_png(&sample)?)?;
    println!(
        "sample {}x{}x{} at planes {:?}",
        sample.channels,
        sample.height,
        sample.width,
        Sample::plane_indices(&voi)
    );

    let axial = extract_slice(&v, Plane::Axial, voi.center(2))?;
    let (lo, hi) = axial.min_max();
    let scaled: Vec<f32> = axial.data.iter().map(|x| (x - lo) / (hi - lo)).collect();
    let axial = nbad::image::Image::new(1, axial.height, axial.width, scaled)?;
    std::fs::write(out.join("axial.png"), export_png(&axial)?)?;
    println!("wrote {}", out.display());
    Ok(())
}
