//! Phantoms, preparation and a short desk-scale training run, all through
//! the library. Pass an iteration count to train longer.
//!
//! ```text
//! cargo run --release --example train_desk -- 300
//! ```

use nbad::dataset::Split;
use nbad::harness::{self, PhantomConfig, PrepareConfig, TrainConfig};
use nbad::model::Preset;

fn main() -> nbad::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let iterations = std::env::args()
        .nth(1)
        .map_or(100, |s| s.parse().expect("iteration count"));
    let dir = tempfile::tempdir()?;
    let vols = dir.path().join("vols");
    let data = dir.path().join("data");

    harness::generate_phantoms(
        &vols,
        &PhantomConfig {
            per_class: 10,
            dims: 64,
            seed: 42,
        },
    )?;
    let prepared = harness::prepare(&PrepareConfig {
        input: vols,
        out: data.clone(),
        size: 64,
        train_fraction: 0.7,
        seed: 42,
    })?;

    let cfg = TrainConfig {
        preset: Preset::Desk,
        iterations,
        eval_every: (iterations / 5).max(1),
        manifest: prepared.manifest_path.clone(),
        checkpoint: dir.path().join("model.ckpt"),
        curves: dir.path().join("curves.csv"),
        ..TrainConfig::default()
    };
    println!("{}", cfg.describe());
    let summary = harness::train(&cfg)?;
    for row in summary.rows.iter().filter(|r| r.test.is_some()) {
        let (loss, acc) = row.test.unwrap();
        println!(
            "{:5} train {:.4} test {loss:.4} acc {acc:.3}",
            row.iteration, row.train_loss
        );
    }
    let report = harness::eval(&cfg.checkpoint, &prepared.manifest_path, Split::Test, None)?;
    println!("accuracy {} on {} test samples", report.accuracy, report.n_samples);
    Ok(())
}
