use rand::Rng;

use super::{Scalar, Tensor};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-element multiplier applied in the forward pass (0 or `1/(1-p)`);
/// `None` when the layer acted as the identity.
#[derive(Debug, Clone, Default)]
pub struct DropoutMask(Option<Vec<f64>>);

/// Inverted dropout. In train mode each element is zeroed with probability
/// `p` and survivors are scaled by `1/(1-p)`; eval mode is the identity and
/// draws nothing from `rng`.
pub fn dropout<T: Scalar>(x: &Tensor<T>, p: f64, mode: Mode, rng: &mut Stream) -> (Tensor<T>, DropoutMask) {
    if mode == Mode::Eval || p == 0.0 {
        return (x.clone(), DropoutMask(None));
    }
    let keep = 1.0 / (1.0 - p);
    let mask: Vec<f64> = (0..x.len())
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect();
    let data = x.data().iter().zip(&mask).map(|(&v, &m)| v * T::of(m)).collect();
    (
        Tensor::from_vec(x.shape(), data).expect("same shape"),
        DropoutMask(Some(mask)),
    )
}

pub fn dropout_backward<T: Scalar>(mask: &DropoutMask, dy: &Tensor<T>) -> Tensor<T> {
    match &mask.0 {
        None => dy.clone(),
        Some(m) => {
            let data = dy.data().iter().zip(m).map(|(&g, &k)| g * T::of(k)).collect();
            Tensor::from_vec(dy.shape(), data).expect("same shape")
        }
    }
}
