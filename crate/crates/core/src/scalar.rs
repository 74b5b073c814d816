//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All state types are generic over a floating point type `S: Real`. In
//! practice `f64` is what the experiments use; `f32` compiles and runs but
//! cannot meet the tolerances the test-suite asserts.

use std::fmt::{Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use rustfft::FftNum;

/// Floating point scalar usable by the grid, FFT and integrator code.
///
/// Note that `FftNum` pulls in `num_traits::Signed`, which also defines
/// `abs`/`signum`; call them as `Float::abs(x)` inside generic code.
pub trait Real:
    Float + FloatConst + FftNum + Default + Display + LowerExp + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must be representable")
    }

    /// Converts a count or index into `Self`.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count must be representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<S> = Complex<S>;

#[inline]
pub(crate) fn two<S: Real>() -> S {
    S::one() + S::one()
}

#[inline]
pub(crate) fn half<S: Real>() -> S {
    S::lit(0.5)
}
