//! Adaptive-moment gradient descent.

use super::Param;
use crate::Scalar;
use ndarray::ArrayD;

/// Adam optimizer over a flat parameter list. Moment buffers are keyed by
/// position, so the parameter order must stay stable across steps.
#[derive(Debug, Clone)]
pub struct Adam<S: Scalar> {
    pub lr: S,
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
    t: i32,
    m: Vec<ArrayD<S>>,
    v: Vec<ArrayD<S>>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(lr: S) -> Self {
        Self {
            lr,
            beta1: S::of(0.9),
            beta2: S::of(0.999),
            eps: S::of(1e-8),
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Applies one update from the accumulated gradients and clears them.
    pub fn step(&mut self, params: &mut [&mut Param<S>]) {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| ArrayD::zeros(p.w.raw_dim())).collect();
            self.v = params.iter().map(|p| ArrayD::zeros(p.w.raw_dim())).collect();
        }
        assert_eq!(self.m.len(), params.len(), "parameter list changed size");
        self.t += 1;
        let b1 = self.beta1;
        let b2 = self.beta2;
        let bc1 = S::one() - b1.powi(self.t);
        let bc2 = S::one() - b2.powi(self.t);
        let lr = self.lr;
        let eps = self.eps;
        for (i, p) in params.iter_mut().enumerate() {
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            ndarray::Zip::from(&mut p.w)
                .and(&p.g)
                .and(m)
                .and(v)
                .for_each(|w, &g, m, v| {
                    *m = b1 * *m + (S::one() - b1) * g;
                    *v = b2 * *v + (S::one() - b2) * g * g;
                    let mhat = *m / bc1;
                    let vhat = *v / bc2;
                    *w = *w - lr * mhat / (vhat.sqrt() + eps);
                });
            p.zero_grad();
        }
    }
}
