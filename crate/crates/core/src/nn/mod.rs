//! Minimal CPU neural-network toolkit: GEMM-backed convolutions with manual
//! backprop, pooling, normalization, activations and an Adam optimizer.
//!
//! Layers are stateless between calls: `forward` takes the input, `backward`
//! takes the same input plus the upstream gradient and accumulates parameter
//! gradients into [`Param::g`]. Callers keep the activation tape.

mod adam;
mod conv2d;
mod conv3d;
pub mod gradcheck;
mod im2col;
mod norm;
mod pool;

pub use adam::Adam;
pub use conv2d::{Conv2d, MaxPool2d, Upsample2d};
pub use conv3d::{Conv3d, ConvTranspose3d};
pub use norm::BatchNorm3d;
pub use pool::MaxPool3d;

use crate::Scalar;
use ndarray::{Array, ArrayD, Dimension, IxDyn};
use rand::Rng;

/// A named, trainable tensor with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Param<S: Scalar> {
    pub name: String,
    pub w: ArrayD<S>,
    pub g: ArrayD<S>,
}

impl<S: Scalar> Param<S> {
    pub fn new(name: impl Into<String>, w: ArrayD<S>) -> Self {
        let g = ArrayD::zeros(w.raw_dim());
        Self {
            name: name.into(),
            w,
            g,
        }
    }

    pub fn zero_grad(&mut self) {
        self.g.fill(S::zero());
    }
}

/// Uniform fan-in initialization: `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
pub fn uniform_init<S: Scalar, R: Rng>(shape: &[usize], fan_in: usize, rng: &mut R) -> ArrayD<S> {
    let a = (1.0 / fan_in.max(1) as f64).sqrt();
    ArrayD::from_shape_fn(IxDyn(shape), |_| S::of(rng.gen_range(-a..a)))
}

pub fn relu_fwd<S: Scalar, D: Dimension>(x: &Array<S, D>) -> Array<S, D> {
    x.mapv(|v| v.max(S::zero()))
}

/// ReLU input gradient from the layer *output* (`y > 0` iff `x > 0`).
pub fn relu_bwd<S: Scalar, D: Dimension>(y: &Array<S, D>, g: &Array<S, D>) -> Array<S, D> {
    let mut out = g.clone();
    out.zip_mut_with(y, |gv, &yv| {
        if yv <= S::zero() {
            *gv = S::zero();
        }
    });
    out
}

pub fn sigmoid_fwd<S: Scalar, D: Dimension>(x: &Array<S, D>) -> Array<S, D> {
    x.mapv(|v| S::one() / (S::one() + (-v).exp()))
}

/// Sigmoid input gradient from the layer output: `g · y · (1 − y)`.
pub fn sigmoid_bwd<S: Scalar, D: Dimension>(y: &Array<S, D>, g: &Array<S, D>) -> Array<S, D> {
    let mut out = g.clone();
    out.zip_mut_with(y, |gv, &yv| {
        *gv = *gv * yv * (S::one() - yv);
    });
    out
}
