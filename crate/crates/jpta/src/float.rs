//! Scalar abstraction: everything numeric in this crate is generic over a
//! floating-point type so the same code runs in f32 or f64.

use std::fmt::{Debug, Display};

/// Floating-point scalar used throughout the simulator (f32 or f64).
pub trait Float:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + std::str::FromStr<Err = std::num::ParseFloatError>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from f64, for constants and grid arithmetic.
    fn of(x: f64) -> Self {
        num_traits::FromPrimitive::from_f64(x).expect("finite f64 converts to scalar")
    }

    /// Conversion from usize, for counts entering formulas.
    fn of_usize(n: usize) -> Self {
        num_traits::FromPrimitive::from_usize(n).expect("usize converts to scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar converts to f64")
    }
}

impl Float for f32 {}
impl Float for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        assert_eq!(f64::of(1.5), 1.5);
        assert_eq!(f32::of_usize(64), 64.0f32);
        assert_eq!(2.25f64.to_f64_lossy(), 2.25);
    }
}
