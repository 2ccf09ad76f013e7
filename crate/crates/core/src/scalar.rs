//! Scalar abstraction shared by every real-valued quantity in the model.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point type the simulation core is generic over (`f32` or `f64`).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts a configuration value into this scalar type.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite configuration value")
    }

    /// Widens to `f64` for reporting.
    fn widen(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }

    /// Clamps into the closed interval `[-1, 1]`.
    fn clamp_unit(self) -> Self {
        self.max(-Self::one()).min(Self::one())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
