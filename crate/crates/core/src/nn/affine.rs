use super::{Scalar, Tensor};
use crate::{Error, Result};

fn dims<T: Scalar>(x: &Tensor<T>, weights: &Tensor<T>) -> Result<(usize, usize, usize)> {
    let n = *x.shape().first().unwrap_or(&0);
    let d_in = x.len() / n.max(1);
    if weights.rank() != 2 || weights.shape()[1] != d_in {
        return Err(Error::ShapeMismatch(format!(
            "affine input {:?} does not match weights {:?}",
            x.shape(),
            weights.shape()
        )));
    }
    Ok((n, d_in, weights.shape()[0]))
}

/// `y[n][j] = Σ_i W[j][i] x[n][i] + b[j]`. Inputs of higher rank are
/// flattened past the batch axis.
pub fn affine<T: Scalar>(x: &Tensor<T>, weights: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, d_in, d_out) = dims(x, weights)?;
    if bias.shape() != [d_out] {
        return Err(Error::ShapeMismatch(format!(
            "bias {:?}, expected [{d_out}]",
            bias.shape()
        )));
    }
    let mut y = Tensor::zeros(&[n, d_out]);
    for row in y.data_mut().chunks_mut(d_out) {
        row.copy_from_slice(bias.data());
    }
    // y (n × out) += x (n × in) · Wᵀ (in × out)
    T::gemm(
        n,
        d_in,
        d_out,
        T::one(),
        x.data(),
        d_in as isize,
        1,
        weights.data(),
        1,
        d_in as isize,
        T::one(),
        y.data_mut(),
        d_out as isize,
        1,
    );
    Ok(y)
}

/// Returns `(dx, dW, db)`; `dx` takes the shape of `x`.
pub fn affine_backward<T: Scalar>(
    x: &Tensor<T>,
    weights: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (n, d_in, d_out) = dims(x, weights)?;
    if dy.shape() != [n, d_out] {
        return Err(Error::ShapeMismatch(format!("affine upstream {:?}", dy.shape())));
    }
    let mut dx = Tensor::zeros(x.shape());
    // dx (n × in) = dy (n × out) · W (out × in)
    T::gemm(
        n,
        d_out,
        d_in,
        T::one(),
        dy.data(),
        d_out as isize,
        1,
        weights.data(),
        d_in as isize,
        1,
        T::zero(),
        dx.data_mut(),
        d_in as isize,
        1,
    );
    let mut dw = Tensor::zeros(weights.shape());
    // dW (out × in) = dyᵀ (out × n) · x (n × in)
    T::gemm(
        d_out,
        n,
        d_in,
        T::one(),
        dy.data(),
        1,
        d_out as isize,
        x.data(),
        d_in as isize,
        1,
        T::zero(),
        dw.data_mut(),
        d_in as isize,
        1,
    );
    let mut db = Tensor::zeros(&[d_out]);
    for row in dy.data().chunks(d_out) {
        for (acc, &g) in db.data_mut().iter_mut().zip(row) {
            *acc = *acc + g;
        }
    }
    Ok((dx, dw, db))
}
