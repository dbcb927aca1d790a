//! Scalar abstraction over the floating point element type.

use ndarray::NdFloat;
use num_traits::FromPrimitive;
use std::iter::Sum;

/// Floating point element type for all tensors: `f32` or `f64`.
pub trait Scalar: NdFloat + FromPrimitive + Sum + 'static {
    /// Conversion from an `f64` constant (lossy for `f32`).
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant not representable")
    }

    fn to_f64c(self) -> f64 {
        num_traits::cast(self).expect("scalar not representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
