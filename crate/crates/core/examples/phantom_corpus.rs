//! Generates a small phantom corpus and reports the mean intensity near
//! each phantom's centre per class.
//!
//! ```text
//! cargo run --example phantom_corpus -- /tmp/phantoms
//! ```

use std::path::PathBuf;

use nbad::harness::{generate_phantoms, phantom_volume, PhantomConfig};
use nbad::CLASS_NAMES;

fn main() -> nbad::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "phantoms".into()));
    let cfg = PhantomConfig {
        per_class: 3,
        dims: 48,
        seed: 11,
    };
    let files = generate_phantoms(&out, &cfg)?;
    println!("{} volumes in {}", files.len(), out.display());

    for (class, name) in CLASS_NAMES.iter().enumerate() {
        let (v, layout) = phantom_volume(class, 0, cfg.dims, cfg.seed)?;
        let c = layout.center.map(|x| x as usize);
        let mut sum = 0.0;
        for dz in 0..3 {
            for dy in 0..3 {
                for dx in 0..3 {
                    sum += v.value(c[0] + dx - 1, c[1] + dy - 1, c[2] + dz - 1);
                }
            }
        }
        println!(
            "{name:10} centre mean {:.3}, {} blob(s)",
            sum / 27.0,
            layout.blobs.len()
        );
    }
    Ok(())
}
