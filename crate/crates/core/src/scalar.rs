//! Scalar abstraction: every numeric routine in this crate is generic over
//! the real field backing the complex arithmetic.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive};

/// Real floating-point scalar (`f32` or `f64`).
///
/// Tolerances throughout the crate are stated as `f64` literals and converted
/// with [`Real::of`]; for `f32` the conversion saturates into the nearest
/// representable value, which keeps the checks meaningful at that precision.
pub trait Real:
    Float + FromPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("scalar constant must be representable")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
}
