use ndarray::ScalarOperand;
use num_traits::{FromPrimitive, NumAssignOps};

/// Floating-point scalar usable by the transport solvers.
///
/// Implemented for `f32` and `f64`. The pipeline itself runs on
/// [`crate::Real`] (`f64`); the generic bound exists so the numerical kernels
/// can be exercised or embedded at other precisions.
pub trait Float:
    num_traits::Float
    + FromPrimitive
    + NumAssignOps
    + ScalarOperand
    + std::fmt::Debug
    + std::fmt::Display
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy cast from `f64`, for literals and tolerances.
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Float")
    }

    /// Lossy cast to `f64`, for reporting.
    fn to_f64(self) -> f64;
}

impl Float for f32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Float for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}
