//! Per-channel normalization over the (T, H, W) extent of a single sample.

use super::Param;
use crate::Scalar;
use ndarray::{Array1, Array4, Axis, IxDyn};

/// Volumetric batch normalization, single-sample form: statistics are taken
/// over all non-channel dimensions of the current input.
#[derive(Debug, Clone)]
pub struct BatchNorm3d<S: Scalar> {
    pub gamma: Param<S>,
    pub beta: Param<S>,
    pub eps: S,
    pub c: usize,
}

pub struct BnCache<S: Scalar> {
    pub xhat: Array4<S>,
    pub invstd: Array1<S>,
}

impl<S: Scalar> BatchNorm3d<S> {
    pub fn new(name: &str, c: usize) -> Self {
        let gamma = ndarray::ArrayD::from_elem(IxDyn(&[c]), S::one());
        let beta = ndarray::ArrayD::zeros(IxDyn(&[c]));
        Self {
            gamma: Param::new(format!("{name}.gamma"), gamma),
            beta: Param::new(format!("{name}.beta"), beta),
            eps: S::of(1e-5),
            c,
        }
    }

    pub fn forward(&self, x: &Array4<S>) -> (Array4<S>, BnCache<S>) {
        let (c, t, h, w) = x.dim();
        assert_eq!(c, self.c);
        let n = S::of((t * h * w) as f64);
        let mut y = Array4::zeros((c, t, h, w));
        let mut xhat = Array4::zeros((c, t, h, w));
        let mut invstd = Array1::zeros(c);
        for cc in 0..c {
            let plane = x.index_axis(Axis(0), cc);
            let mean = plane.sum() / n;
            let var = plane.iter().map(|&v| (v - mean) * (v - mean)).sum::<S>() / n;
            let istd = S::one() / (var + self.eps).sqrt();
            invstd[cc] = istd;
            let g = self.gamma.w[IxDyn(&[cc])];
            let b = self.beta.w[IxDyn(&[cc])];
            let mut yh = xhat.index_axis_mut(Axis(0), cc);
            let mut yo = y.index_axis_mut(Axis(0), cc);
            ndarray::Zip::from(&mut yh).and(&mut yo).and(&plane).for_each(
                |xh, yv, &xv| {
                    *xh = (xv - mean) * istd;
                    *yv = g * *xh + b;
                },
            );
        }
        (y, BnCache { xhat, invstd })
    }

    pub fn backward(&mut self, cache: &BnCache<S>, gout: &Array4<S>) -> Array4<S> {
        let (c, t, h, w) = gout.dim();
        let n = S::of((t * h * w) as f64);
        let mut gx = Array4::zeros((c, t, h, w));
        for cc in 0..c {
            let go = gout.index_axis(Axis(0), cc);
            let xh = cache.xhat.index_axis(Axis(0), cc);
            let g = self.gamma.w[IxDyn(&[cc])];
            let sum_g = go.sum();
            let sum_gx: S = go.iter().zip(xh.iter()).map(|(&a, &b)| a * b).sum();
            self.gamma.g[IxDyn(&[cc])] = self.gamma.g[IxDyn(&[cc])] + sum_gx;
            self.beta.g[IxDyn(&[cc])] = self.beta.g[IxDyn(&[cc])] + sum_g;
            let istd = cache.invstd[cc];
            let scale = g * istd / n;
            let mut gxc = gx.index_axis_mut(Axis(0), cc);
            ndarray::Zip::from(&mut gxc).and(&go).and(&xh).for_each(|gv, &gov, &xhv| {
                *gv = scale * (n * gov - sum_g - xhv * sum_gx);
            });
        }
        gx
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        vec![&self.gamma, &self.beta]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        vec![&mut self.gamma, &mut self.beta]
    }
}
