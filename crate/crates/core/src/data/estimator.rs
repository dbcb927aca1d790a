//! Backward optical-flow estimation strategies.
//!
//! The built-in estimator is a classical coarse-to-fine local least-squares
//! method: a grayscale pyramid, and at each level a few iterations of warp /
//! linearize / solve over a small window. It returns backward-convention
//! flows: `backward_warp(x_t, flow) ≈ x_{t+1}`. Real datasets can instead
//! import externally computed `.flo` files or plug in synthetic ground truth.

use crate::data::flo::read_flo;
use crate::types::{FlowField, FlowVolume, Frame};
use crate::warp::warp_channel;
use crate::{Error, Result, Scalar};
use ndarray::Array2;
use std::path::PathBuf;

/// A pluggable flow source.
pub enum FlowEstimator<S: Scalar> {
    /// Coarse-to-fine local least squares on image intensities.
    BuiltinCoarseToFine {
        levels: usize,
        /// Odd window side length for the local normal equations.
        window: usize,
        iterations: usize,
    },
    /// Pre-computed `.flo` files, one per step.
    ImportedFiles { paths: Vec<PathBuf> },
    /// Analytic flows from a synthetic clip.
    SyntheticGroundTruth { flows: FlowVolume<S> },
}

impl<S: Scalar> FlowEstimator<S> {
    pub fn builtin() -> Self {
        Self::BuiltinCoarseToFine {
            levels: 3,
            window: 5,
            iterations: 3,
        }
    }

    /// Flow for step `t` (frame `t` → frame `t+1`).
    pub fn estimate_at(&self, t: usize, x_t: &Frame<S>, x_t1: &Frame<S>) -> Result<FlowField<S>> {
        if x_t.height() != x_t1.height() || x_t.width() != x_t1.width() {
            return Err(Error::InvalidInput("frame dimensions differ".into()));
        }
        match self {
            Self::BuiltinCoarseToFine {
                levels,
                window,
                iterations,
            } => builtin_flow(x_t, x_t1, *levels, *window, *iterations),
            Self::ImportedFiles { paths } => {
                let path = paths.get(t).ok_or_else(|| {
                    Error::Estimation(format!("no imported flow for step {t}"))
                })?;
                let f = read_flo::<S>(path)
                    .map_err(|e| Error::Estimation(format!("step {t}: {e}")))?;
                if f.height() != x_t.height() || f.width() != x_t.width() {
                    return Err(Error::Estimation(format!(
                        "imported flow {}×{} does not match frames {}×{}",
                        f.height(),
                        f.width(),
                        x_t.height(),
                        x_t.width()
                    )));
                }
                Ok(f)
            }
            Self::SyntheticGroundTruth { flows } => flows
                .flows()
                .get(t)
                .cloned()
                .ok_or_else(|| Error::Estimation(format!("no ground-truth flow for step {t}"))),
        }
    }
}

/// Single-step entry point; imported-file and
/// ground-truth strategies use their step-0 entry.
pub fn estimate_backward_flow<S: Scalar>(
    x_t: &Frame<S>,
    x_t1: &Frame<S>,
    est: &FlowEstimator<S>,
) -> Result<FlowField<S>> {
    est.estimate_at(0, x_t, x_t1)
}

fn grayscale<S: Scalar>(f: &Frame<S>) -> Array2<S> {
    let (h, w) = (f.height(), f.width());
    let third = S::of(1.0 / 3.0);
    Array2::from_shape_fn((h, w), |(y, x)| {
        (f.pixels()[[y, x, 0]] + f.pixels()[[y, x, 1]] + f.pixels()[[y, x, 2]]) * third
    })
}

fn downsample2<S: Scalar>(img: &Array2<S>) -> Array2<S> {
    let (h, w) = img.dim();
    let (h2, w2) = (h / 2, w / 2);
    let q = S::of(0.25);
    Array2::from_shape_fn((h2, w2), |(y, x)| {
        (img[[2 * y, 2 * x]] + img[[2 * y, 2 * x + 1]] + img[[2 * y + 1, 2 * x]]
            + img[[2 * y + 1, 2 * x + 1]])
            * q
    })
}

fn upsample_flow<S: Scalar>(c: &Array2<S>, h: usize, w: usize) -> Array2<S> {
    let (ch, cw) = c.dim();
    let two = S::of(2.0);
    Array2::from_shape_fn((h, w), |(y, x)| {
        let sy = (y / 2).min(ch - 1);
        let sx = (x / 2).min(cw - 1);
        c[[sy, sx]] * two
    })
}

/// 3×3 median filter (clamped borders); removes local least-squares outliers
/// between refinement iterations.
fn median3<S: Scalar>(img: &Array2<S>) -> Array2<S> {
    let (h, w) = img.dim();
    let mut vals = Vec::with_capacity(9);
    Array2::from_shape_fn((h, w), |(y, x)| {
        vals.clear();
        for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
            for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                vals.push(img[[yy, xx]]);
            }
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals[vals.len() / 2]
    })
}

fn builtin_flow<S: Scalar>(
    x_t: &Frame<S>,
    x_t1: &Frame<S>,
    levels: usize,
    window: usize,
    iterations: usize,
) -> Result<FlowField<S>> {
    if window % 2 == 0 || window == 0 {
        return Err(Error::Estimation("window must be odd".into()));
    }
    let i0_full = grayscale(x_t); // source (earlier frame)
    let i1_full = grayscale(x_t1); // reference (later frame)

    // pyramid, finest first; stop before frames get degenerate
    let mut pyr0 = vec![i0_full];
    let mut pyr1 = vec![i1_full];
    for _ in 1..levels {
        let last0 = pyr0.last().unwrap();
        if last0.dim().0 / 2 < window || last0.dim().1 / 2 < window {
            break;
        }
        pyr0.push(downsample2(last0));
        pyr1.push(downsample2(pyr1.last().unwrap()));
    }

    let r = window / 2;
    let half = S::of(0.5);
    let lambda = S::of(1e-4);
    let mut u: Array2<S> = Array2::zeros(pyr0.last().unwrap().dim());
    let mut v: Array2<S> = Array2::zeros(pyr0.last().unwrap().dim());

    for li in (0..pyr0.len()).rev() {
        let i0 = &pyr0[li];
        let i1 = &pyr1[li];
        let (h, w) = i0.dim();
        if u.dim() != (h, w) {
            u = upsample_flow(&u, h, w);
            v = upsample_flow(&v, h, w);
        }
        for _ in 0..iterations {
            // sample the earlier frame at the current flow and linearize
            let warped = warp_channel(i0, &u, &v);
            let mut ix = Array2::zeros((h, w));
            let mut iy = Array2::zeros((h, w));
            let mut e = Array2::zeros((h, w));
            for y in 0..h {
                for x in 0..w {
                    let xm = x.saturating_sub(1);
                    let xp = (x + 1).min(w - 1);
                    let ym = y.saturating_sub(1);
                    let yp = (y + 1).min(h - 1);
                    ix[[y, x]] = (warped[[y, xp]] - warped[[y, xm]]) * half;
                    iy[[y, x]] = (warped[[yp, x]] - warped[[ym, x]]) * half;
                    e[[y, x]] = warped[[y, x]] - i1[[y, x]];
                }
            }
            let mut du = Array2::zeros((h, w));
            let mut dv = Array2::zeros((h, w));
            for y in 0..h {
                for x in 0..w {
                    let (mut gxx, mut gxy, mut gyy) = (S::zero(), S::zero(), S::zero());
                    let (mut bx, mut by) = (S::zero(), S::zero());
                    let y0 = y.saturating_sub(r);
                    let y1 = (y + r).min(h - 1);
                    let x0 = x.saturating_sub(r);
                    let x1 = (x + r).min(w - 1);
                    for yy in y0..=y1 {
                        for xx in x0..=x1 {
                            let gx = ix[[yy, xx]];
                            let gy = iy[[yy, xx]];
                            let er = e[[yy, xx]];
                            gxx = gxx + gx * gx;
                            gxy = gxy + gx * gy;
                            gyy = gyy + gy * gy;
                            bx = bx - gx * er;
                            by = by - gy * er;
                        }
                    }
                    // damped 2×2 solve: textureless windows fall back to no
                    // update, i.e. the flow stays regularized toward zero
                    gxx = gxx + lambda;
                    gyy = gyy + lambda;
                    let det = gxx * gyy - gxy * gxy;
                    if det > S::of(1e-12) {
                        du[[y, x]] = (gyy * bx - gxy * by) / det;
                        dv[[y, x]] = (gxx * by - gxy * bx) / det;
                    }
                }
            }
            let cap = S::of(1.0); // per-iteration trust region
            u.zip_mut_with(&du, |a, &d| *a = *a + d.max(-cap).min(cap));
            v.zip_mut_with(&dv, |a, &d| *a = *a + d.max(-cap).min(cap));
            u = median3(&u);
            v = median3(&v);
        }
    }
    FlowField::new(u, v)
}
