//! Tensor kernels with hand-written gradients.
//!
//! Every layer exposes a forward map and a backward map that, given the
//! upstream gradient, returns the gradient with respect to its input and its
//! parameters. Kernels are generic over [`Scalar`] so the same code runs in
//! single precision for training and double precision for gradient checks.
//!
//! Reductions happen in a fixed loop order that does not depend on the
//! number of worker threads, so results are bitwise reproducible.

mod activation;
mod affine;
mod conv;
mod dropout;
mod gradcheck;
mod hinge;
mod init;
mod pool;
mod sgd;
mod tensor;

pub use self::activation::{relu, relu_backward};
pub use self::affine::{affine, affine_backward};
pub use self::conv::{conv2d, conv2d_backward, conv2d_naive, conv2d_naive_backward, conv_out_extent, ConvGrads};
pub use self::dropout::{dropout, dropout_backward, DropoutMask, Mode};
pub use self::gradcheck::{finite_diff_check, finite_diff_check_piecewise, relative_error};
pub use self::hinge::{hinge_loss, DEFAULT_MARGIN};
pub use self::init::he_normal;
pub use self::pool::{pool, pool_backward, PoolCache, PoolMode};
pub use self::sgd::{sgd_step, OptState, Parameter};
pub use self::tensor::Tensor;

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type of tensors.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Default + Debug + Sum + Send + Sync + 'static {
    /// `c = alpha * a · b + beta * c` with arbitrary row/column strides.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
        rsc: isize,
        csc: isize,
    );

    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every scalar")
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

macro_rules! impl_scalar {
    ($t:ty, $gemm:path) => {
        impl Scalar for $t {
            #[inline]
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                rsa: isize,
                csa: isize,
                b: &[Self],
                rsb: isize,
                csb: isize,
                beta: Self,
                c: &mut [Self],
                rsc: isize,
                csc: isize,
            ) {
                if m == 0 || n == 0 {
                    return;
                }
                let span = |rows: usize, cols: usize, rs: isize, cs: isize| {
                    if rows == 0 || cols == 0 {
                        0
                    } else {
                        ((rows - 1) as isize * rs + (cols - 1) as isize * cs) as usize + 1
                    }
                };
                assert!(a.len() >= span(m, k, rsa, csa), "gemm: a too short");
                assert!(b.len() >= span(k, n, rsb, csb), "gemm: b too short");
                assert!(c.len() >= span(m, n, rsc, csc), "gemm: c too short");
                // SAFETY: the asserts above bound every index the kernel touches.
                unsafe {
                    $gemm(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        rsc,
                        csc,
                    );
                }
            }
        }
    };
}

impl_scalar!(f32, matrixmultiply::sgemm);
impl_scalar!(f64, matrixmultiply::dgemm);
