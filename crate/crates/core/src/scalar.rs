//! Real scalar abstraction shared by every module.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real field the algebra is built over (`f32` or `f64`).
///
/// Coefficients are `Complex<T>`; linear algebra goes through nalgebra, so the
/// trait requires `RealField` on top of the num-traits conversions.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Magnitude below which a stored coefficient is dropped.
    const PRUNE: f64;

    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn prune_tol() -> Self {
        Self::lit(Self::PRUNE)
    }
}

impl Scalar for f64 {
    const PRUNE: f64 = 1e-14;
}

impl Scalar for f32 {
    const PRUNE: f64 = 1e-6;
}

/// Complex coefficient over a real scalar.
pub type Cx<T> = Complex<T>;

pub(crate) fn cx<T: Scalar>(re: f64, im: f64) -> Cx<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub(crate) fn real<T: Scalar>(re: T) -> Cx<T> {
    Complex::new(re, T::zero())
}

pub(crate) fn abs<T: Scalar>(z: Cx<T>) -> T {
    z.norm_sqr().sqrt()
}
