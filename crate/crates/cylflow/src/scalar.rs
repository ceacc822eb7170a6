//! Scalar abstraction: the whole library is generic over the floating point
//! type, with `f64` as the default used by the CLI.

use std::fmt::{Debug, Display, LowerExp};
use std::ops::{AddAssign, DivAssign, MulAssign, RemAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar: f32 or f64.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + rustfft::FftNum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + RemAssign
    + Display
    + LowerExp
    + Debug
    + Default
    + 'static
{
    /// Shorthand for converting an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal conversion")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::cast::<Self, f64>(self).expect("scalar to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the library scalar.
pub type Cx<T> = num_complex::Complex<T>;
