//! Volumetric convolution and its transpose, lowered to GEMM.

use super::im2col::{col2im3, conv_out_dims, im2col3};
use super::{uniform_init, Param};
use crate::Scalar;
use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, Array4, Axis, IxDyn};
#[cfg(test)]
use ndarray::ArrayD;
use rand::Rng;

/// 3D convolution over `(C, T, H, W)` tensors.
#[derive(Debug, Clone)]
pub struct Conv3d<S: Scalar> {
    pub w: Param<S>, // (Co, Ci, kt, kh, kw)
    pub b: Param<S>, // (Co,)
    pub k: [usize; 3],
    pub stride: [usize; 3],
    pub pad: [usize; 3],
    pub ci: usize,
    pub co: usize,
}

impl<S: Scalar> Conv3d<S> {
    pub fn new<R: Rng>(
        name: &str,
        ci: usize,
        co: usize,
        k: [usize; 3],
        stride: [usize; 3],
        pad: [usize; 3],
        rng: &mut R,
    ) -> Self {
        let fan_in = ci * k[0] * k[1] * k[2];
        let w = uniform_init(&[co, ci, k[0], k[1], k[2]], fan_in, rng);
        let b = uniform_init(&[co], fan_in, rng);
        Self {
            w: Param::new(format!("{name}.w"), w),
            b: Param::new(format!("{name}.b"), b),
            k,
            stride,
            pad,
            ci,
            co,
        }
    }

    pub fn out_dims(&self, dims: [usize; 3]) -> [usize; 3] {
        conv_out_dims(dims, self.k, self.stride, self.pad)
    }

    pub fn forward(&self, x: &Array4<S>) -> Array4<S> {
        let (ci, t, h, w) = x.dim();
        assert_eq!(ci, self.ci, "{}: channel mismatch", self.w.name);
        let [to, ho, wo] = self.out_dims([t, h, w]);
        let n = to * ho * wo;
        let col = im2col3(x, self.k, self.stride, self.pad);
        let kk = self.ci * self.k[0] * self.k[1] * self.k[2];
        let w2 = self
            .w
            .w
            .view()
            .into_shape((self.co, kk))
            .expect("contiguous weights");
        let mut out2 = Array2::<S>::zeros((self.co, n));
        general_mat_mul(S::one(), &w2, &col, S::zero(), &mut out2);
        for (c, mut row) in out2.axis_iter_mut(Axis(0)).enumerate() {
            let b = self.b.w[IxDyn(&[c])];
            row.mapv_inplace(|v| v + b);
        }
        out2.into_shape((self.co, to, ho, wo)).unwrap()
    }

    /// Accumulates parameter gradients and returns the input gradient.
    /// The column matrix is recomputed from `x` rather than cached.
    pub fn backward(&mut self, x: &Array4<S>, gout: &Array4<S>) -> Array4<S> {
        let (_, t, h, w) = x.dim();
        let (co, to, ho, wo) = gout.dim();
        assert_eq!(co, self.co);
        let n = to * ho * wo;
        let kk = self.ci * self.k[0] * self.k[1] * self.k[2];
        let gout2 = gout.view().into_shape((co, n)).expect("contiguous gradient");

        for (c, row) in gout2.axis_iter(Axis(0)).enumerate() {
            self.b.g[IxDyn(&[c])] = self.b.g[IxDyn(&[c])] + row.sum();
        }

        let col = im2col3(x, self.k, self.stride, self.pad);
        {
            let mut gw2 = self.w.g.view_mut().into_shape((co, kk)).unwrap();
            general_mat_mul(S::one(), &gout2, &col.t(), S::one(), &mut gw2);
        }

        let w2 = self.w.w.view().into_shape((co, kk)).unwrap();
        let mut gcol = Array2::<S>::zeros((kk, n));
        general_mat_mul(S::one(), &w2.t(), &gout2, S::zero(), &mut gcol);
        col2im3(&gcol, self.ci, [t, h, w], self.k, self.stride, self.pad)
    }

    /// Input gradient only; parameter gradients are left untouched.
    pub fn backward_input(&self, in_dims: [usize; 3], gout: &Array4<S>) -> Array4<S> {
        let (co, to, ho, wo) = gout.dim();
        assert_eq!(co, self.co);
        let n = to * ho * wo;
        let kk = self.ci * self.k[0] * self.k[1] * self.k[2];
        let gout2 = gout.view().into_shape((co, n)).expect("contiguous gradient");
        let w2 = self.w.w.view().into_shape((co, kk)).unwrap();
        let mut gcol = Array2::<S>::zeros((kk, n));
        general_mat_mul(S::one(), &w2.t(), &gout2, S::zero(), &mut gcol);
        col2im3(&gcol, self.ci, in_dims, self.k, self.stride, self.pad)
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        vec![&self.w, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        vec![&mut self.w, &mut self.b]
    }
}

/// Transposed (fractionally strided) 3D convolution.
///
/// Output extents follow `(i − 1)·stride − 2·pad + k`.
#[derive(Debug, Clone)]
pub struct ConvTranspose3d<S: Scalar> {
    pub w: Param<S>, // (Ci, Co, kt, kh, kw)
    pub b: Param<S>, // (Co,)
    pub k: [usize; 3],
    pub stride: [usize; 3],
    pub pad: [usize; 3],
    pub ci: usize,
    pub co: usize,
}

impl<S: Scalar> ConvTranspose3d<S> {
    pub fn new<R: Rng>(
        name: &str,
        ci: usize,
        co: usize,
        k: [usize; 3],
        stride: [usize; 3],
        pad: [usize; 3],
        rng: &mut R,
    ) -> Self {
        let fan_in = ci * k[0] * k[1] * k[2];
        let w = uniform_init(&[ci, co, k[0], k[1], k[2]], fan_in, rng);
        let b = uniform_init(&[co], fan_in, rng);
        Self {
            w: Param::new(format!("{name}.w"), w),
            b: Param::new(format!("{name}.b"), b),
            k,
            stride,
            pad,
            ci,
            co,
        }
    }

    pub fn out_dims(&self, dims: [usize; 3]) -> [usize; 3] {
        let mut out = [0; 3];
        for i in 0..3 {
            out[i] = (dims[i] - 1) * self.stride[i] + self.k[i] - 2 * self.pad[i];
        }
        out
    }

    pub fn forward(&self, x: &Array4<S>) -> Array4<S> {
        let (ci, t, h, w) = x.dim();
        assert_eq!(ci, self.ci, "{}: channel mismatch", self.w.name);
        let out_dims = self.out_dims([t, h, w]);
        let n_in = t * h * w;
        let kk = self.co * self.k[0] * self.k[1] * self.k[2];
        let x2 = x.view().into_shape((ci, n_in)).expect("contiguous input");
        let w2 = self.w.w.view().into_shape((ci, kk)).unwrap();
        let mut colt = Array2::<S>::zeros((kk, n_in));
        general_mat_mul(S::one(), &w2.t(), &x2, S::zero(), &mut colt);
        let mut out = col2im3(&colt, self.co, out_dims, self.k, self.stride, self.pad);
        for (c, mut plane) in out.axis_iter_mut(Axis(0)).enumerate() {
            let b = self.b.w[IxDyn(&[c])];
            plane.mapv_inplace(|v| v + b);
        }
        out
    }

    pub fn backward(&mut self, x: &Array4<S>, gout: &Array4<S>) -> Array4<S> {
        let (ci, t, h, w) = x.dim();
        let n_in = t * h * w;
        let kk = self.co * self.k[0] * self.k[1] * self.k[2];

        for (c, plane) in gout.axis_iter(Axis(0)).enumerate() {
            self.b.g[IxDyn(&[c])] = self.b.g[IxDyn(&[c])] + plane.sum();
        }

        // im2col over the *output* gradient mirrors the forward scatter
        let gcol = im2col3(gout, self.k, self.stride, self.pad);
        debug_assert_eq!(gcol.dim(), (kk, n_in));

        let x2 = x.view().into_shape((ci, n_in)).unwrap();
        {
            let mut gw2 = self.w.g.view_mut().into_shape((ci, kk)).unwrap();
            general_mat_mul(S::one(), &x2, &gcol.t(), S::one(), &mut gw2);
        }

        let w2 = self.w.w.view().into_shape((ci, kk)).unwrap();
        let mut gx2 = Array2::<S>::zeros((ci, n_in));
        general_mat_mul(S::one(), &w2, &gcol, S::zero(), &mut gx2);
        gx2.into_shape((ci, t, h, w)).unwrap()
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        vec![&self.w, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        vec![&mut self.w, &mut self.b]
    }
}
