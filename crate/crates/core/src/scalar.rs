//! Scalar abstraction shared by every numeric routine in the crate.

use std::iter::Sum;

use ndarray::NdFloat;
use num_traits::FromPrimitive;

/// Floating point scalar the networks, rewards and metrics are generic over.
///
/// Implemented for `f32` and `f64`. Gradient checks are only meaningful in
/// `f64`; `f32` is supported for inference and compact experiments.
pub trait Real: NdFloat + FromPrimitive + Sum + Default {
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl<T> Real for T where T: NdFloat + FromPrimitive + Sum + Default {}
