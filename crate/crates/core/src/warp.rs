//! Backward bilinear warping.

use crate::types::{FlowField, Frame};
use crate::{Error, Result, Scalar};
use ndarray::{Array2, Array3};

/// Bilinear sample of a single-channel image at `(sy, sx)` with
/// clamp-to-edge boundary handling.
#[inline]
pub fn sample_bilinear<S: Scalar>(img: &Array2<S>, sy: S, sx: S) -> S {
    let (h, w) = img.dim();
    let max_y = S::of((h - 1) as f64);
    let max_x = S::of((w - 1) as f64);
    let sy = sy.max(S::zero()).min(max_y);
    let sx = sx.max(S::zero()).min(max_x);
    let y0 = sy.floor();
    let x0 = sx.floor();
    let fy = sy - y0;
    let fx = sx - x0;
    let y0 = y0.to_f64c() as usize;
    let x0 = x0.to_f64c() as usize;
    let y1 = (y0 + 1).min(h - 1);
    let x1 = (x0 + 1).min(w - 1);
    let one = S::one();
    let top = (one - fx) * img[[y0, x0]] + fx * img[[y0, x1]];
    let bot = (one - fx) * img[[y1, x0]] + fx * img[[y1, x1]];
    (one - fy) * top + fy * bot
}

/// Warps a single-channel array by a backward flow:
/// `out(y, x) = bilinear(src, y + v(y,x), x + u(y,x))`.
pub fn warp_channel<S: Scalar>(src: &Array2<S>, u: &Array2<S>, v: &Array2<S>) -> Array2<S> {
    let (h, w) = src.dim();
    let mut out = Array2::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let sy = S::of(y as f64) + v[[y, x]];
            let sx = S::of(x as f64) + u[[y, x]];
            out[[y, x]] = sample_bilinear(src, sy, sx);
        }
    }
    out
}

/// Backward-warps a frame: every output pixel bilinearly samples the input at
/// its flow-displaced location. Sample coordinates are clamped to the image
/// boundary, so outputs stay within the input value range.
pub fn backward_warp<S: Scalar>(frame: &Frame<S>, flow: &FlowField<S>) -> Result<Frame<S>> {
    let (h, w) = (frame.height(), frame.width());
    if flow.height() != h || flow.width() != w {
        return Err(Error::InvalidInput(format!(
            "flow {}×{} does not match frame {}×{}",
            flow.height(),
            flow.width(),
            h,
            w
        )));
    }
    let px = frame.pixels();
    let mut out = Array3::zeros((h, w, 3));
    let one = S::one();
    for y in 0..h {
        for x in 0..w {
            let sy = S::of(y as f64) + flow.v()[[y, x]];
            let sx = S::of(x as f64) + flow.u()[[y, x]];
            let max_y = S::of((h - 1) as f64);
            let max_x = S::of((w - 1) as f64);
            let sy = sy.max(S::zero()).min(max_y);
            let sx = sx.max(S::zero()).min(max_x);
            let y0f = sy.floor();
            let x0f = sx.floor();
            let fy = sy - y0f;
            let fx = sx - x0f;
            let y0 = y0f.to_f64c() as usize;
            let x0 = x0f.to_f64c() as usize;
            let y1 = (y0 + 1).min(h - 1);
            let x1 = (x0 + 1).min(w - 1);
            for c in 0..3 {
                let top = (one - fx) * px[[y0, x0, c]] + fx * px[[y0, x1, c]];
                let bot = (one - fx) * px[[y1, x0, c]] + fx * px[[y1, x1, c]];
                let v = (one - fy) * top + fy * bot;
                // convex combination; clamp only guards fp rounding
                out[[y, x, c]] = v.max(S::zero()).min(one);
            }
        }
    }
    Frame::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array2, Array3};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(h: usize, w: usize, seed: u64) -> Frame<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let px = Array3::from_shape_fn((h, w, 3), |_| rng.gen_range(0.0..1.0));
        Frame::new(px).unwrap()
    }

    /// Independent per-pixel reference: nearest-integer sampling for integer
    /// flows, written as a plain loop with explicit clamping.
    fn integer_shift_oracle(frame: &Frame<f64>, du: i64, dv: i64) -> Frame<f64> {
        let (h, w) = (frame.height(), frame.width());
        let mut out = Array3::zeros((h, w, 3));
        for y in 0..h {
            for x in 0..w {
                let sy = (y as i64 + dv).clamp(0, h as i64 - 1) as usize;
                let sx = (x as i64 + du).clamp(0, w as i64 - 1) as usize;
                for c in 0..3 {
                    out[[y, x, c]] = frame.pixels()[[sy, sx, c]];
                }
            }
        }
        Frame::new(out).unwrap()
    }

    #[test]
    fn zero_flow_is_identity_bitwise() {
        let f = random_frame(8, 8, 1);
        let warped = backward_warp(&f, &FlowField::zeros(8, 8)).unwrap();
        assert_eq!(f.pixels(), warped.pixels());
    }

    #[test]
    fn integer_shifts_match_loop_oracle() {
        let f = random_frame(8, 8, 2);
        for (du, dv) in [(1i64, 0i64), (0, 1), (-2, 3), (5, -1), (9, 9)] {
            let flow = FlowField::new(
                Array2::from_elem((8, 8), du as f64),
                Array2::from_elem((8, 8), dv as f64),
            )
            .unwrap();
            let warped = backward_warp(&f, &flow).unwrap();
            let oracle = integer_shift_oracle(&f, du, dv);
            assert_eq!(warped.pixels(), oracle.pixels(), "shift ({du},{dv})");
        }
    }

    #[test]
    fn half_pixel_bilinear_case() {
        // 1×2 frame (0.0, 1.0); sampling at x=0.5 must give exactly 0.5.
        let mut px = Array3::zeros((1, 2, 3));
        for c in 0..3 {
            px[[0, 1, c]] = 1.0;
        }
        let f = Frame::new(px).unwrap();
        let mut u = Array2::zeros((1, 2));
        u[[0, 0]] = 0.5;
        let flow = FlowField::new(u, Array2::zeros((1, 2))).unwrap();
        let warped = backward_warp(&f, &flow).unwrap();
        for c in 0..3 {
            assert!((warped.pixels()[[0, 0, c]] - 0.5f64).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let f = random_frame(8, 8, 3);
        assert!(backward_warp(&f, &FlowField::zeros(4, 4)).is_err());
    }

    #[test]
    fn linearity_in_pixels() {
        // warp(a·F1 + b·F2) == a·warp(F1) + b·warp(F2)
        let f1 = random_frame(8, 8, 4);
        let f2 = random_frame(8, 8, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = Array2::from_shape_fn((8, 8), |_| rng.gen_range(-2.0..2.0));
        let v = Array2::from_shape_fn((8, 8), |_| rng.gen_range(-2.0..2.0));
        let flow = FlowField::new(u, v).unwrap();
        let (a, b) = (0.3, 0.7);
        let mix = Frame::new(f1.pixels() * a + f2.pixels() * b).unwrap();
        let lhs = backward_warp(&mix, &flow).unwrap();
        let w1 = backward_warp(&f1, &flow).unwrap();
        let w2 = backward_warp(&f2, &flow).unwrap();
        let rhs = w1.pixels() * a + w2.pixels() * b;
        for (l, r) in lhs.pixels().iter().zip(rhs.iter()) {
            assert!((l - r).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn warp_output_within_input_range(seed in 0u64..500, du in -4.0f64..4.0, dv in -4.0f64..4.0) {
            let f = random_frame(6, 6, seed);
            let flow = FlowField::new(
                Array2::from_elem((6, 6), du),
                Array2::from_elem((6, 6), dv),
            ).unwrap();
            let warped = backward_warp(&f, &flow).unwrap();
            for c in 0..3 {
                let ch = f.pixels().index_axis(ndarray::Axis(2), c);
                let lo = ch.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = ch.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for &p in warped.pixels().index_axis(ndarray::Axis(2), c).iter() {
                    prop_assert!(p >= lo - 1e-9 && p <= hi + 1e-9);
                }
            }
        }

        #[test]
        fn normalize_round_trip(seed in 0u64..500, max_disp in 0.5f64..16.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = Array2::from_shape_fn((5, 5), |_| rng.gen_range(-max_disp..max_disp));
            let v = Array2::from_shape_fn((5, 5), |_| rng.gen_range(-max_disp..max_disp));
            let f = FlowField::new(u, v).unwrap();
            let n = crate::flow::normalize_flow(&f, max_disp).unwrap();
            let back = crate::flow::denormalize_flow(&n).unwrap();
            for (a, b) in f.u().iter().zip(back.u().iter()) {
                prop_assert!((a - b).abs() < 1e-6);
            }
            for (a, b) in f.v().iter().zip(back.v().iter()) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
