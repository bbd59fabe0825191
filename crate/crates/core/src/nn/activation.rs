use super::{Scalar, Tensor};

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Passes `upstream` where `x > 0`; the derivative at 0 is taken as 0.
pub fn relu_backward<T: Scalar>(x: &Tensor<T>, upstream: &Tensor<T>) -> Tensor<T> {
    let data = x
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&v, &g)| if v > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::from_vec(x.shape(), data).expect("same shape as input")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_negatives() {
        let x = Tensor::<f64>::from_f64(&[3], &[-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
        let up = Tensor::from_f64(&[3], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(relu_backward(&x, &up).data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn identity_on_non_negative() {
        let x = Tensor::<f32>::from_f64(&[4], &[0.0, 0.5, 3.0, 1e-30]).unwrap();
        assert_eq!(relu(&x), x);
    }
}
