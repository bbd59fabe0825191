//! Takes a few optimizer steps, saves a checkpoint and restores it.

use nbad::model::{build_network, train_step, Checkpoint, NetworkSpec, Preset};
use nbad::nn::{OptState, Tensor};
use nbad::rng;

fn main() -> nbad::Result<()> {
    let spec = NetworkSpec::from_preset(Preset::Desk);
    let mut net = build_network(&spec, 0)?;
    let mut opt = OptState::new(0.001, 0.0005, 0.9)?;
    let mut drop = rng::stream(0, &[1]);

    let [c, h, w] = spec.input;
    let x = Tensor::<f32>::from_f64(&[2, c, h, w], &vec![0.5; 2 * c * h * w])?;
    for step in 0..3 {
        let loss = train_step(&mut net, &x, &[1, 3], &mut opt, &mut drop)?;
        println!("step {step}: loss {loss}");
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("model.ckpt");
    Checkpoint::capture(&net, &opt, &drop, 3).save(&path)?;
    let loaded = Checkpoint::load(&path)?;
    let (restored, _, _) = loaded.restore()?;
    println!(
        "{} bytes, iteration {}",
        std::fs::metadata(&path)?.len(),
        loaded.iteration
    );
    println!("same scores: {}", restored.scores(&x)?.data() == net.scores(&x)?.data());
    Ok(())
}
