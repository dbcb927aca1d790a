//! Spatial layers, implemented on top of the volumetric primitives with a
//! unit time extent.

use super::{Conv3d, MaxPool3d, Param};
use crate::Scalar;
use ndarray::{Array3, Array4};
use rand::Rng;

fn lift<S: Scalar>(x: &Array3<S>) -> Array4<S> {
    let (c, h, w) = x.dim();
    x.clone().into_shape((c, 1, h, w)).unwrap()
}

fn drop_t<S: Scalar>(x: Array4<S>) -> Array3<S> {
    let (c, t, h, w) = x.dim();
    debug_assert_eq!(t, 1);
    x.into_shape((c, h, w)).unwrap()
}

/// 2D convolution over `(C, H, W)` tensors.
#[derive(Debug, Clone)]
pub struct Conv2d<S: Scalar> {
    inner: Conv3d<S>,
}

impl<S: Scalar> Conv2d<S> {
    pub fn new<R: Rng>(
        name: &str,
        ci: usize,
        co: usize,
        k: [usize; 2],
        stride: [usize; 2],
        pad: [usize; 2],
        rng: &mut R,
    ) -> Self {
        Self {
            inner: Conv3d::new(
                name,
                ci,
                co,
                [1, k[0], k[1]],
                [1, stride[0], stride[1]],
                [0, pad[0], pad[1]],
                rng,
            ),
        }
    }

    pub fn out_ch(&self) -> usize {
        self.inner.co
    }

    pub fn forward(&self, x: &Array3<S>) -> Array3<S> {
        drop_t(self.inner.forward(&lift(x)))
    }

    pub fn backward(&mut self, x: &Array3<S>, gout: &Array3<S>) -> Array3<S> {
        drop_t(self.inner.backward(&lift(x), &lift(gout)))
    }

    /// Input gradient without touching parameter gradients (for frozen
    /// feature extractors).
    pub fn backward_input(&self, in_dims: (usize, usize, usize), gout: &Array3<S>) -> Array3<S> {
        let (_c, h, w) = in_dims;
        drop_t(self.inner.backward_input([1, h, w], &lift(gout)))
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        self.inner.params()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        self.inner.params_mut()
    }
}

/// 2×2 spatial max pooling.
#[derive(Debug, Clone, Copy)]
pub struct MaxPool2d {
    inner: MaxPool3d,
}

impl MaxPool2d {
    pub fn new() -> Self {
        Self {
            inner: MaxPool3d::new([1, 2, 2]),
        }
    }

    pub fn forward<S: Scalar>(&self, x: &Array3<S>) -> (Array3<S>, Vec<usize>) {
        let (y, idx) = self.inner.forward(&lift(x));
        (drop_t(y), idx)
    }

    pub fn backward<S: Scalar>(
        &self,
        idx: &[usize],
        gout: &Array3<S>,
        in_dims: (usize, usize, usize),
    ) -> Array3<S> {
        let (c, h, w) = in_dims;
        drop_t(self.inner.backward(idx, &lift(gout), (c, 1, h, w)))
    }
}

impl Default for MaxPool2d {
    fn default() -> Self {
        Self::new()
    }
}

/// Nearest-neighbor ×2 spatial upsampling.
#[derive(Debug, Clone, Copy)]
pub struct Upsample2d;

impl Upsample2d {
    pub fn forward<S: Scalar>(&self, x: &Array3<S>) -> Array3<S> {
        let (c, h, w) = x.dim();
        let mut out = Array3::zeros((c, h * 2, w * 2));
        for cc in 0..c {
            for y in 0..h {
                for xx in 0..w {
                    let v = x[[cc, y, xx]];
                    out[[cc, 2 * y, 2 * xx]] = v;
                    out[[cc, 2 * y, 2 * xx + 1]] = v;
                    out[[cc, 2 * y + 1, 2 * xx]] = v;
                    out[[cc, 2 * y + 1, 2 * xx + 1]] = v;
                }
            }
        }
        out
    }

    pub fn backward<S: Scalar>(&self, gout: &Array3<S>) -> Array3<S> {
        let (c, h2, w2) = gout.dim();
        let (h, w) = (h2 / 2, w2 / 2);
        let mut gx = Array3::zeros((c, h, w));
        for cc in 0..c {
            for y in 0..h {
                for xx in 0..w {
                    gx[[cc, y, xx]] = gout[[cc, 2 * y, 2 * xx]]
                        + gout[[cc, 2 * y, 2 * xx + 1]]
                        + gout[[cc, 2 * y + 1, 2 * xx]]
                        + gout[[cc, 2 * y + 1, 2 * xx + 1]];
                }
            }
        }
        gx
    }
}
