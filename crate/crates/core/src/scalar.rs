//! Scalar abstraction for the numeric core.
//!
//! Everything downstream (coefficients, losses, risks, models, the oracle)
//! is generic over [`Real`], so the same code runs in `f32` or `f64`.
//! Randomness is always drawn in `f64` and then narrowed, which keeps a
//! given seed's sample stream identical across scalar types.
//!
//! The tolerances quoted throughout the test suite assume `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the core computes in. Implemented for `f32` and
/// `f64`; all operations that the crate needs beyond `num_traits::Float`
/// are collected here so downstream bounds stay short.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Narrow an `f64` constant or intermediate into this scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to scalar type")
    }

    /// Widen to `f64` (exact for both supported types).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn of_and_as_f64_round_trip() {
        assert_eq!(f64::of(0.625), 0.625);
        assert_eq!(f32::of(0.625), 0.625_f32);
        assert_eq!(0.625_f64.as_f64(), 0.625);
        assert_eq!(0.625_f32.as_f64(), 0.625);
    }

    #[test]
    fn narrowing_rounds_rather_than_failing() {
        // 1e-300 underflows f32 to zero; `of` must not panic on that.
        assert_eq!(f32::of(1e-300), 0.0_f32);
    }
}
