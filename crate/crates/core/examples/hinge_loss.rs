//! Multiclass hinge loss on a hand-written score batch.

use nbad::nn::{hinge_loss, Tensor, DEFAULT_MARGIN};

fn main() -> nbad::Result<()> {
    let scores = Tensor::<f64>::from_vec(
        &[2, 5],
        vec![
            2.0, 0.5, -1.0, 1.8, 0.0, //
            0.0, 0.0, 0.0, 0.0, 0.0,
        ],
    )?;
    let (loss, grad) = hinge_loss(&scores, &[0, 3], DEFAULT_MARGIN)?;
    println!("loss {loss}");
    for row in grad.data().chunks(5) {
        println!("dscores {row:?}");
    }
    Ok(())
}
