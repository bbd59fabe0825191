//! 2-D cross-correlation with zero padding.
//!
//! The production path lowers each sample to a patch matrix (one row per
//! output position, one column per `(channel, ky, kx)` tap) and multiplies it
//! with the filter bank. [`conv2d_naive`] is the direct nested-loop reference
//! the patch path is tested against.
//!
//! Output extents use floor division: taps that would start past the padded
//! border are dropped.

use rayon::prelude::*;

use super::{Scalar, Tensor};
use crate::{Error, Result};

/// Patch-matrix elements processed per batch chunk.
const CHUNK_ELEMENTS: usize = 1 << 22;

pub fn conv_out_extent(input: usize, kernel: usize, stride: usize, pad: usize) -> Result<usize> {
    if stride == 0 || kernel == 0 {
        return Err(Error::ShapeMismatch("zero kernel or stride".into()));
    }
    if input + 2 * pad < kernel {
        return Err(Error::ShapeMismatch(format!(
            "kernel {kernel} larger than padded input {}",
            input + 2 * pad
        )));
    }
    Ok((input + 2 * pad - kernel) / stride + 1)
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    f: usize,
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
    stride: usize,
    pad: usize,
}

impl Geometry {
    fn new<T: Scalar>(x: &Tensor<T>, weights: &Tensor<T>, stride: usize, pad: usize) -> Result<Geometry> {
        let (xs, ws) = (x.shape(), weights.shape());
        if xs.len() != 4 || ws.len() != 4 {
            return Err(Error::ShapeMismatch(format!(
                "conv2d expects N×C×H×W input and F×C×kh×kw weights, got {xs:?} and {ws:?}"
            )));
        }
        if xs[1] != ws[1] {
            return Err(Error::ShapeMismatch(format!(
                "input has {} channels, weights expect {}",
                xs[1], ws[1]
            )));
        }
        Ok(Geometry {
            n: xs[0],
            c: xs[1],
            h: xs[2],
            w: xs[3],
            f: ws[0],
            kh: ws[2],
            kw: ws[3],
            oh: conv_out_extent(xs[2], ws[2], stride, pad)?,
            ow: conv_out_extent(xs[3], ws[3], stride, pad)?,
            stride,
            pad,
        })
    }

    fn taps(&self) -> usize {
        self.c * self.kh * self.kw
    }

    fn positions(&self) -> usize {
        self.oh * self.ow
    }

    fn chunk(&self) -> usize {
        (CHUNK_ELEMENTS / (self.taps() * self.positions()).max(1)).clamp(1, self.n.max(1))
    }

    /// Input coordinate of output position `o` and tap `k`, if inside.
    #[inline]
    fn source(&self, o: usize, k: usize, extent: usize) -> Option<usize> {
        (o * self.stride + k).checked_sub(self.pad).filter(|&s| s < extent)
    }
}

fn check_bias<T: Scalar>(bias: &Tensor<T>, g: &Geometry) -> Result<()> {
    if bias.shape() != [g.f] {
        return Err(Error::ShapeMismatch(format!(
            "bias shape {:?}, expected [{}]",
            bias.shape(),
            g.f
        )));
    }
    Ok(())
}

/// Writes the patch matrix of one sample: `positions × taps`, row-major.
fn im2col<T: Scalar>(sample: &[T], g: &Geometry, out: &mut [T]) {
    let taps = g.taps();
    for oy in 0..g.oh {
        for ox in 0..g.ow {
            let row = &mut out[(oy * g.ow + ox) * taps..][..taps];
            let mut q = 0;
            for c in 0..g.c {
                let plane = &sample[c * g.h * g.w..][..g.h * g.w];
                for ky in 0..g.kh {
                    let sy = g.source(oy, ky, g.h);
                    for kx in 0..g.kw {
                        row[q] = match (sy, g.source(ox, kx, g.w)) {
                            (Some(y), Some(x)) => plane[y * g.w + x],
                            _ => T::zero(),
                        };
                        q += 1;
                    }
                }
            }
        }
    }
}

/// Scatters patch-matrix gradients of one sample back onto its input.
fn col2im<T: Scalar>(cols: &[T], g: &Geometry, out: &mut [T]) {
    let taps = g.taps();
    for oy in 0..g.oh {
        for ox in 0..g.ow {
            let row = &cols[(oy * g.ow + ox) * taps..][..taps];
            let mut q = 0;
            for c in 0..g.c {
                for ky in 0..g.kh {
                    let sy = g.source(oy, ky, g.h);
                    for kx in 0..g.kw {
                        if let (Some(y), Some(x)) = (sy, g.source(ox, kx, g.w)) {
                            out[(c * g.h + y) * g.w + x] = out[(c * g.h + y) * g.w + x] + row[q];
                        }
                        q += 1;
                    }
                }
            }
        }
    }
}

fn patches<T: Scalar>(x: &Tensor<T>, g: &Geometry, start: usize, count: usize) -> Vec<T> {
    let block = g.positions() * g.taps();
    let sample_len = g.c * g.h * g.w;
    let mut cols = vec![T::zero(); count * block];
    cols.par_chunks_mut(block).enumerate().for_each(|(i, out)| {
        let s = start + i;
        im2col(&x.data()[s * sample_len..][..sample_len], g, out);
    });
    cols
}

/// Forward convolution: `x` is `N×C×H×W`, `weights` `F×C×kh×kw`, `bias` `F`.
pub fn conv2d<T: Scalar>(
    x: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<Tensor<T>> {
    let g = Geometry::new(x, weights, stride, pad)?;
    check_bias(bias, &g)?;
    let (taps, pos) = (g.taps(), g.positions());
    let mut y = Tensor::zeros(&[g.n, g.f, g.oh, g.ow]);
    let chunk = g.chunk();
    let mut start = 0;
    while start < g.n {
        let count = chunk.min(g.n - start);
        let cols = patches(x, &g, start, count);
        let rows = count * pos;
        let mut yt = vec![T::zero(); rows * g.f];
        // yt (rows × F) = cols (rows × taps) · Wᵀ (taps × F)
        T::gemm(
            rows,
            taps,
            g.f,
            T::one(),
            &cols,
            taps as isize,
            1,
            weights.data(),
            1,
            taps as isize,
            T::zero(),
            &mut yt,
            g.f as isize,
            1,
        );
        let out = &mut y.data_mut()[start * g.f * pos..(start + count) * g.f * pos];
        out.par_chunks_mut(g.f * pos).enumerate().for_each(|(i, sample)| {
            for f in 0..g.f {
                let b = bias.data()[f];
                for p in 0..pos {
                    sample[f * pos + p] = yt[(i * pos + p) * g.f + f] + b;
                }
            }
        });
        start += count;
    }
    Ok(y)
}

/// Gradients of a convolution.
#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Backward pass of [`conv2d`] for upstream gradient `dy` (`N×F×H'×W'`).
pub fn conv2d_backward<T: Scalar>(
    x: &Tensor<T>,
    weights: &Tensor<T>,
    dy: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<ConvGrads<T>> {
    let g = Geometry::new(x, weights, stride, pad)?;
    if dy.shape() != [g.n, g.f, g.oh, g.ow] {
        return Err(Error::ShapeMismatch(format!(
            "upstream {:?}, expected {:?}",
            dy.shape(),
            [g.n, g.f, g.oh, g.ow]
        )));
    }
    let (taps, pos) = (g.taps(), g.positions());
    let sample_len = g.c * g.h * g.w;
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = Tensor::zeros(weights.shape());
    let mut db = Tensor::zeros(&[g.f]);
    for n in 0..g.n {
        for f in 0..g.f {
            let s = &dy.data()[(n * g.f + f) * pos..][..pos];
            db.data_mut()[f] = s.iter().fold(db.data()[f], |acc, &v| acc + v);
        }
    }
    let chunk = g.chunk();
    let mut start = 0;
    while start < g.n {
        let count = chunk.min(g.n - start);
        let cols = patches(x, &g, start, count);
        let rows = count * pos;
        let mut dyt = vec![T::zero(); rows * g.f];
        dyt.par_chunks_mut(pos * g.f).enumerate().for_each(|(i, block)| {
            let src = &dy.data()[(start + i) * g.f * pos..][..g.f * pos];
            for p in 0..pos {
                for f in 0..g.f {
                    block[p * g.f + f] = src[f * pos + p];
                }
            }
        });
        // dW (F × taps) += dytᵀ (F × rows) · cols (rows × taps)
        T::gemm(
            g.f,
            rows,
            taps,
            T::one(),
            &dyt,
            1,
            g.f as isize,
            &cols,
            taps as isize,
            1,
            T::one(),
            dw.data_mut(),
            taps as isize,
            1,
        );
        // dcols (rows × taps) = dyt (rows × F) · W (F × taps)
        let mut dcols = vec![T::zero(); rows * taps];
        T::gemm(
            rows,
            g.f,
            taps,
            T::one(),
            &dyt,
            g.f as isize,
            1,
            weights.data(),
            taps as isize,
            1,
            T::zero(),
            &mut dcols,
            taps as isize,
            1,
        );
        let dx_chunk = &mut dx.data_mut()[start * sample_len..(start + count) * sample_len];
        dx_chunk
            .par_chunks_mut(sample_len)
            .zip(dcols.par_chunks(pos * taps))
            .for_each(|(out, cols)| col2im(cols, &g, out));
        start += count;
    }
    Ok(ConvGrads {
        input: dx,
        weights: dw,
        bias: db,
    })
}

/// Direct nested-loop convolution.
pub fn conv2d_naive<T: Scalar>(
    x: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<Tensor<T>> {
    let g = Geometry::new(x, weights, stride, pad)?;
    check_bias(bias, &g)?;
    let (xd, wd) = (x.data(), weights.data());
    let mut y = Tensor::zeros(&[g.n, g.f, g.oh, g.ow]);
    let yd = y.data_mut();
    for n in 0..g.n {
        for f in 0..g.f {
            for oy in 0..g.oh {
                for ox in 0..g.ow {
                    let mut acc = bias.data()[f];
                    for c in 0..g.c {
                        for ky in 0..g.kh {
                            for kx in 0..g.kw {
                                if let (Some(sy), Some(sx)) = (g.source(oy, ky, g.h), g.source(ox, kx, g.w)) {
                                    acc = acc
                                        + wd[((f * g.c + c) * g.kh + ky) * g.kw + kx]
                                            * xd[((n * g.c + c) * g.h + sy) * g.w + sx];
                                }
                            }
                        }
                    }
                    yd[((n * g.f + f) * g.oh + oy) * g.ow + ox] = acc;
                }
            }
        }
    }
    Ok(y)
}

/// Direct nested-loop backward pass.
pub fn conv2d_naive_backward<T: Scalar>(
    x: &Tensor<T>,
    weights: &Tensor<T>,
    dy: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<ConvGrads<T>> {
    let g = Geometry::new(x, weights, stride, pad)?;
    let (xd, wd, dyd) = (x.data(), weights.data(), dy.data());
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = Tensor::zeros(weights.shape());
    let mut db = Tensor::zeros(&[g.f]);
    for n in 0..g.n {
        for f in 0..g.f {
            for oy in 0..g.oh {
                for ox in 0..g.ow {
                    let up = dyd[((n * g.f + f) * g.oh + oy) * g.ow + ox];
                    db.data_mut()[f] = db.data()[f] + up;
                    for c in 0..g.c {
                        for ky in 0..g.kh {
                            for kx in 0..g.kw {
                                if let (Some(sy), Some(sx)) = (g.source(oy, ky, g.h), g.source(ox, kx, g.w)) {
                                    let wi = ((f * g.c + c) * g.kh + ky) * g.kw + kx;
                                    let xi = ((n * g.c + c) * g.h + sy) * g.w + sx;
                                    dw.data_mut()[wi] = dw.data()[wi] + up * xd[xi];
                                    dx.data_mut()[xi] = dx.data()[xi] + up * wd[wi];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ConvGrads {
        input: dx,
        weights: dw,
        bias: db,
    })
}
