//! Scalar traits shared by every numerical routine in the crate.
//!
//! [`Real`] is the floating-point field (`f32` or `f64`). [`Scalar`] is a
//! matrix element: either a `Real` itself or a `Complex<Real>`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Floating-point field used throughout the crate.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + FftNum + Sum + Default + Display + Scalar<Real = Self>
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Element type of a dense matrix.
pub trait Scalar:
    Copy + PartialEq + Debug + Send + Sync + 'static + num_traits::Num + NumAssign
    + std::ops::Neg<Output = Self> + Sum
{
    type Real: Real;

    fn conj(self) -> Self;
    fn modulus(self) -> Self::Real;
    fn norm_sqr(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
    fn re(self) -> Self::Real;
    fn to_complex(self) -> Complex<Self::Real>;
    fn finite(self) -> bool;
}

macro_rules! impl_real_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;
            #[inline]
            fn conj(self) -> Self {
                self
            }
            #[inline]
            fn modulus(self) -> Self {
                self.abs()
            }
            #[inline]
            fn norm_sqr(self) -> Self {
                self * self
            }
            #[inline]
            fn from_real(r: Self) -> Self {
                r
            }
            #[inline]
            fn re(self) -> Self {
                self
            }
            #[inline]
            fn to_complex(self) -> Complex<Self> {
                Complex::new(self, 0.0)
            }
            #[inline]
            fn finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }
    };
}

impl_real_scalar!(f32);
impl_real_scalar!(f64);

impl<T: Real> Scalar for Complex<T> {
    type Real = T;
    #[inline]
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    #[inline]
    fn modulus(self) -> T {
        self.norm()
    }
    #[inline]
    fn norm_sqr(self) -> T {
        Complex::norm_sqr(&self)
    }
    #[inline]
    fn from_real(r: T) -> Self {
        Complex::new(r, T::zero())
    }
    #[inline]
    fn re(self) -> T {
        self.re
    }
    #[inline]
    fn to_complex(self) -> Complex<T> {
        self
    }
    #[inline]
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}
