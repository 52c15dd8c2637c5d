//! Scalar abstraction for the numerical engines.
//!
//! Every engine in this crate is written against [`Real`] so the same code
//! runs at `f32` or `f64`. The crate root exposes `f64` aliases for the
//! common types; `f64` is what the CLI and the verification suite use.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the engines: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + LowerExp
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
///
/// Panics only if `T` cannot represent finite `f64` values at all, which no
/// implementor of [`Real`] in this crate does.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 constant must convert into the scalar type")
}

/// `1/2` in the working scalar type; the generator and the schemes use it a lot.
#[inline]
pub fn half<T: Real>() -> T {
    real(0.5)
}
