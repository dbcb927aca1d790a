//! Flow normalization and encoder-input assembly.

use crate::types::{ConditionedInputCube, FlowField, Frame, NormalizedFlowField};
use crate::{Error, Result, Scalar};
use ndarray::Array4;

/// Maps pixel-unit displacements into `[0, 1]` so flow channels share the
/// dynamic range of image channels: `n = clamp(d / (2·max_disp) + 0.5, 0, 1)`.
pub fn normalize_flow<S: Scalar>(flow: &FlowField<S>, max_disp: S) -> Result<NormalizedFlowField<S>> {
    if !(max_disp > S::zero()) {
        return Err(Error::InvalidInput("max_disp must be positive".into()));
    }
    let half = S::of(0.5);
    let scale = S::of(2.0) * max_disp;
    let map = |d: S| (d / scale + half).max(S::zero()).min(S::one());
    let u = flow.u().mapv(map);
    let v = flow.v().mapv(map);
    NormalizedFlowField::from_parts(u, v, max_disp)
}

/// Inverse of [`normalize_flow`]: `d = (n − 0.5)·2·max_disp`.
pub fn denormalize_flow<S: Scalar>(nflow: &NormalizedFlowField<S>) -> Result<FlowField<S>> {
    let half = S::of(0.5);
    let scale = S::of(2.0) * nflow.max_disp();
    let map = |n: S| (n - half) * scale;
    FlowField::new(nflow.u().mapv(map), nflow.v().mapv(map))
}

/// Stacks the starting frame with each normalized flow map into the
/// M×5×H×W encoder input cube. The frame is replicated at every time step;
/// channel order per slice is (u, v, R, G, B).
pub fn stack_condition<S: Scalar>(
    x0: &Frame<S>,
    nflows: &[NormalizedFlowField<S>],
) -> Result<ConditionedInputCube<S>> {
    if nflows.is_empty() {
        return Err(Error::InvalidInput("need at least one flow map".into()));
    }
    let (h, w) = (x0.height(), x0.width());
    if nflows.iter().any(|f| f.height() != h || f.width() != w) {
        return Err(Error::InvalidInput(
            "flow maps do not match frame dimensions".into(),
        ));
    }
    let m = nflows.len();
    let mut cube = Array4::zeros((m, 5, h, w));
    let px = x0.pixels();
    for (t, nf) in nflows.iter().enumerate() {
        for y in 0..h {
            for x in 0..w {
                cube[[t, 0, y, x]] = nf.u()[[y, x]];
                cube[[t, 1, y, x]] = nf.v()[[y, x]];
                for c in 0..3 {
                    cube[[t, 2 + c, y, x]] = px[[y, x, c]];
                }
            }
        }
    }
    Ok(ConditionedInputCube::from_array(cube))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn const_flow(h: usize, w: usize, u: f64, v: f64) -> FlowField<f64> {
        FlowField::new(Array2::from_elem((h, w), u), Array2::from_elem((h, w), v)).unwrap()
    }

    #[test]
    fn zero_flow_maps_to_half() {
        let n = normalize_flow(&const_flow(4, 4, 0.0, 0.0), 8.0).unwrap();
        assert!(n.u().iter().chain(n.v().iter()).all(|&c| c == 0.5));
    }

    #[test]
    fn saturating_endpoint() {
        let n = normalize_flow(&const_flow(2, 2, 8.0, 0.0), 8.0).unwrap();
        assert!(n.u().iter().all(|&c| c == 1.0));
    }

    #[test]
    fn clamps_beyond_range() {
        let n = normalize_flow(&const_flow(2, 2, -12.0, 0.0), 8.0).unwrap();
        assert!(n.u().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn denormalize_endpoints() {
        let n = normalize_flow(&const_flow(2, 2, 0.0, 0.0), 8.0).unwrap();
        let f = denormalize_flow(&n).unwrap();
        assert!(f.u().iter().all(|&c| c == 0.0));

        let n = normalize_flow(&const_flow(2, 2, 8.0, 8.0), 8.0).unwrap();
        let f = denormalize_flow(&n).unwrap();
        assert!(f.u().iter().chain(f.v().iter()).all(|&c| c == 8.0));
    }

    #[test]
    fn rejects_nonpositive_max_disp() {
        assert!(normalize_flow(&const_flow(2, 2, 0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn cube_shape_and_replication() {
        let x0 = crate::types::Frame::constant(8, 6, 0.25f64).unwrap();
        let nf: Vec<_> = (0..3)
            .map(|_| normalize_flow(&const_flow(8, 6, 1.0, -1.0), 4.0).unwrap())
            .collect();
        let cube = stack_condition(&x0, &nf).unwrap();
        assert_eq!(cube.data().dim(), (3, 5, 8, 6));
        for t in 0..3 {
            for y in 0..8 {
                for x in 0..6 {
                    for c in 0..3 {
                        assert_eq!(cube.data()[[t, 2 + c, y, x]], 0.25);
                    }
                }
            }
        }
    }

    #[test]
    fn cube_rejects_mismatched_dims() {
        let x0 = crate::types::Frame::constant(8, 8, 0.5f64).unwrap();
        let nf = vec![normalize_flow(&const_flow(4, 4, 0.0, 0.0), 4.0).unwrap()];
        assert!(stack_condition(&x0, &nf).is_err());
    }

    #[test]
    fn stack_condition_is_pure() {
        let x0 = crate::types::Frame::constant(4, 4, 0.5f32).unwrap();
        let nf = vec![normalize_flow(&const_flow(4, 4, 1.0, 0.5), 4.0).unwrap()];
        let nf32: Vec<_> = nf
            .iter()
            .map(|n| {
                NormalizedFlowField::from_parts(
                    n.u().mapv(|v| v as f32),
                    n.v().mapv(|v| v as f32),
                    n.max_disp() as f32,
                )
                .unwrap()
            })
            .collect();
        let a = stack_condition(&x0, &nf32).unwrap();
        let b = stack_condition(&x0, &nf32).unwrap();
        assert_eq!(a, b);
    }
}
