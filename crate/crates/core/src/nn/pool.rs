//! Volumetric max pooling (kernel == stride, no padding).

use crate::Scalar;
use ndarray::Array4;

#[derive(Debug, Clone, Copy)]
pub struct MaxPool3d {
    pub k: [usize; 3],
}

impl MaxPool3d {
    pub fn new(k: [usize; 3]) -> Self {
        Self { k }
    }

    pub fn out_dims(&self, dims: [usize; 3]) -> [usize; 3] {
        [
            dims[0] / self.k[0],
            dims[1] / self.k[1],
            dims[2] / self.k[2],
        ]
    }

    /// Returns the pooled tensor and the flat source index of each maximum
    /// (for the backward scatter).
    pub fn forward<S: Scalar>(&self, x: &Array4<S>) -> (Array4<S>, Vec<usize>) {
        let (c, t, h, w) = x.dim();
        let [to, ho, wo] = self.out_dims([t, h, w]);
        let mut out = Array4::zeros((c, to, ho, wo));
        let mut idx = vec![0usize; c * to * ho * wo];
        let xs = x.as_slice().expect("contiguous input");
        let mut oi = 0usize;
        for cc in 0..c {
            for ot in 0..to {
                for oy in 0..ho {
                    for ox in 0..wo {
                        let mut best = S::neg_infinity();
                        let mut best_i = 0usize;
                        for dt in 0..self.k[0] {
                            let tt = ot * self.k[0] + dt;
                            for dy in 0..self.k[1] {
                                let yy = oy * self.k[1] + dy;
                                let base = ((cc * t + tt) * h + yy) * w + ox * self.k[2];
                                for dx in 0..self.k[2] {
                                    let v = xs[base + dx];
                                    if v > best {
                                        best = v;
                                        best_i = base + dx;
                                    }
                                }
                            }
                        }
                        out[[cc, ot, oy, ox]] = best;
                        idx[oi] = best_i;
                        oi += 1;
                    }
                }
            }
        }
        (out, idx)
    }

    pub fn backward<S: Scalar>(
        &self,
        idx: &[usize],
        gout: &Array4<S>,
        in_dims: (usize, usize, usize, usize),
    ) -> Array4<S> {
        let mut gx = Array4::zeros(in_dims);
        let gs = gx.as_slice_mut().unwrap();
        for (&i, &g) in idx.iter().zip(gout.as_slice().unwrap().iter()) {
            gs[i] = gs[i] + g;
        }
        gx
    }
}
