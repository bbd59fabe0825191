use super::{Scalar, Tensor};
use crate::{Error, Result};

pub const DEFAULT_MARGIN: f64 = 1.0;

/// Weston–Watkins multiclass hinge loss averaged over the batch:
/// `L = (1/N) Σ_n Σ_{j≠y_n} max(0, s_j − s_{y_n} + Δ)`.
///
/// The gradient is `+1/N` at every violating class and `−count/N` at the
/// true class, so each row sums to zero.
pub fn hinge_loss<T: Scalar>(scores: &Tensor<T>, labels: &[usize], margin: f64) -> Result<(T, Tensor<T>)> {
    if scores.rank() != 2 || scores.shape()[0] != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "scores {:?} for {} labels",
            scores.shape(),
            labels.len()
        )));
    }
    let (n, k) = (scores.shape()[0], scores.shape()[1]);
    if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::LabelOutOfRange { label: bad, classes: k });
    }
    let delta = T::of(margin);
    let inv_n = T::one() / T::of(n as f64);
    let mut loss = T::zero();
    let mut grad = Tensor::zeros(&[n, k]);
    for (row, (&y, g)) in scores
        .data()
        .chunks(k)
        .zip(labels.iter().zip(grad.data_mut().chunks_mut(k)))
    {
        let mut sample = T::zero();
        let mut violations = 0usize;
        for j in 0..k {
            if j == y {
                continue;
            }
            let m = row[j] - row[y] + delta;
            if m > T::zero() {
                sample = sample + m;
                violations += 1;
                g[j] = inv_n;
            }
        }
        g[y] = -T::of(violations as f64) * inv_n;
        loss = loss + sample;
    }
    Ok((loss * inv_n, grad))
}
