//! Scalar abstraction for the closed-form and linear-algebra kernels.
//!
//! The Gaussian-state calculus and the reconciliation maps are written once
//! against [`Real`] and instantiated for `f64` (the default everywhere in the
//! simulator) and `f32`.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type usable by the generic kernels: `f32` or `f64`.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable literal")
    }

    /// Machine-precision-scaled tolerance used for symmetry and physicality checks.
    fn tolerance() -> Self;
}

impl Real for f32 {
    fn tolerance() -> Self {
        1e-4
    }
}

impl Real for f64 {
    fn tolerance() -> Self {
        1e-9
    }
}
