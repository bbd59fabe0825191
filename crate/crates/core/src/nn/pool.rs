use serde::{Deserialize, Serialize};

use super::{Scalar, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolMode {
    Max,
    Avg,
}

/// What the backward pass of a pool needs.
#[derive(Debug, Clone)]
pub struct PoolCache {
    input_shape: Vec<usize>,
    mode: PoolMode,
    window: (usize, usize),
    stride: usize,
    /// Flat input index of each output's maximum (max mode only).
    argmax: Vec<usize>,
}

fn out_extent(input: usize, window: usize, stride: usize) -> Result<usize> {
    if window == 0 || stride == 0 || window > input || !(input - window).is_multiple_of(stride) {
        return Err(Error::ShapeMismatch(format!(
            "pool window {window} stride {stride} does not tile extent {input}"
        )));
    }
    Ok((input - window) / stride + 1)
}

/// Unpadded pooling over `window = (height, width)`. Windows must tile the
/// input exactly. Max ties resolve to the lowest linear index.
pub fn pool<T: Scalar>(
    x: &Tensor<T>,
    mode: PoolMode,
    window: (usize, usize),
    stride: usize,
) -> Result<(Tensor<T>, PoolCache)> {
    let s = x.shape();
    if s.len() != 4 {
        return Err(Error::ShapeMismatch(format!("pool expects N×C×H×W, got {s:?}")));
    }
    let (n, c, h, w) = (s[0], s[1], s[2], s[3]);
    let oh = out_extent(h, window.0, stride)?;
    let ow = out_extent(w, window.1, stride)?;
    let mut y = Tensor::zeros(&[n, c, oh, ow]);
    let mut argmax = Vec::new();
    if mode == PoolMode::Max {
        argmax.reserve(n * c * oh * ow);
    }
    let area = T::of((window.0 * window.1) as f64);
    let xd = x.data();
    let yd = y.data_mut();
    let mut o = 0;
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let (y0, x0) = (oy * stride, ox * stride);
                match mode {
                    PoolMode::Max => {
                        let mut best = base + y0 * w + x0;
                        for ky in 0..window.0 {
                            for kx in 0..window.1 {
                                let i = base + (y0 + ky) * w + x0 + kx;
                                if xd[i] > xd[best] {
                                    best = i;
                                }
                            }
                        }
                        yd[o] = xd[best];
                        argmax.push(best);
                    }
                    PoolMode::Avg => {
                        let mut acc = T::zero();
                        for ky in 0..window.0 {
                            for kx in 0..window.1 {
                                acc = acc + xd[base + (y0 + ky) * w + x0 + kx];
                            }
                        }
                        yd[o] = acc / area;
                    }
                }
                o += 1;
            }
        }
    }
    Ok((
        y,
        PoolCache {
            input_shape: s.to_vec(),
            mode,
            window,
            stride,
            argmax,
        },
    ))
}

/// Max routes each upstream value to its window's winner; average spreads
/// it evenly over the window.
pub fn pool_backward<T: Scalar>(cache: &PoolCache, dy: &Tensor<T>) -> Result<Tensor<T>> {
    let s = &cache.input_shape;
    let (h, w) = (s[2], s[3]);
    let oh = (h - cache.window.0) / cache.stride + 1;
    let ow = (w - cache.window.1) / cache.stride + 1;
    if dy.shape() != [s[0], s[1], oh, ow] {
        return Err(Error::ShapeMismatch(format!("pool upstream {:?}", dy.shape())));
    }
    let mut dx = Tensor::zeros(s);
    let dxd = dx.data_mut();
    match cache.mode {
        PoolMode::Max => {
            for (&i, &g) in cache.argmax.iter().zip(dy.data()) {
                dxd[i] = dxd[i] + g;
            }
        }
        PoolMode::Avg => {
            let area = T::of((cache.window.0 * cache.window.1) as f64);
            let mut o = 0;
            for plane in 0..s[0] * s[1] {
                let base = plane * h * w;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let share = dy.data()[o] / area;
                        for ky in 0..cache.window.0 {
                            for kx in 0..cache.window.1 {
                                let i = base + (oy * cache.stride + ky) * w + ox * cache.stride + kx;
                                dxd[i] = dxd[i] + share;
                            }
                        }
                        o += 1;
                    }
                }
            }
        }
    }
    Ok(dx)
}
