//! Draws a few augmented views of one sample and shows they depend only on
//! the stream they are given.

use nbad::augment::{augment_image, eval_view, AugmentConfig};
use nbad::harness::{phantom_volume, prepare_volume};
use nbad::rng;

fn main() -> nbad::Result<()> {
    let (v, _) = phantom_volume(4, 0, 64, 1)?;
    let (image, _) = prepare_volume(&v, 80)?;
    let cfg = AugmentConfig::square(64);

    for slot in 0..4u64 {
        let a = augment_image(&image, &cfg, &mut rng::stream(7, &[slot]))?;
        let b = augment_image(&image, &cfg, &mut rng::stream(7, &[slot]))?;
        let mean = a.data.iter().sum::<f32>() / a.data.len() as f32;
        println!(
            "slot {slot}: {}x{} mean {mean:.4} repeatable {}",
            a.height,
            a.width,
            a == b
        );
    }
    let view = eval_view(&image, &cfg)?;
    println!("eval view {}x{}", view.height, view.width);
    Ok(())
}
