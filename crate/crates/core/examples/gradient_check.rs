//! Compares the analytic convolution gradient with central differences.

use nbad::nn::{conv2d, conv2d_backward, finite_diff_check, Tensor};
use rand::Rng;

fn main() -> nbad::Result<()> {
    let mut rng = nbad::rng::stream(3, &[]);
    let mut random = |shape: &[usize]| {
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Tensor::<f64>::from_vec(shape, data)
    };
    let x = random(&[2, 3, 7, 7])?;
    let w = random(&[4, 3, 3, 3])?;
    let b = random(&[4])?;
    let r = random(&[2, 4, 4, 4])?;
    let (stride, pad) = (2, 1);

    // Loss is <r, conv(x)>, so the upstream gradient is r.
    let g = conv2d_backward(&x, &w, &r, stride, pad)?;
    let loss_of = |x: &Tensor<f64>, w: &Tensor<f64>| conv2d(x, w, &b, stride, pad).unwrap().dot_f64(&r);

    let ex = finite_diff_check(
        |p| loss_of(&Tensor::from_vec(x.shape(), p.to_vec()).unwrap(), &w),
        x.data(),
        g.input.data(),
        1e-3,
        None,
    );
    let ew = finite_diff_check(
        |p| loss_of(&x, &Tensor::from_vec(w.shape(), p.to_vec()).unwrap()),
        w.data(),
        g.weights.data(),
        1e-3,
        None,
    );
    println!("input grad rel err {ex:.2e}");
    println!("weight grad rel err {ew:.2e}");
    Ok(())
}
