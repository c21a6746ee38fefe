//! Scalar abstraction so the integrator and shooting kernels run in either
//! `f64` or double-double precision.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use super::dd::Dd;

pub trait Real:
    Copy
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn max(self, other: Self) -> Self;
    /// cos; on the double-double type this is first-order corrected
    /// (~1e-17 absolute), which every caller tolerance dominates.
    fn cos_approx(self) -> Self;
    fn sin_approx(self) -> Self;

    #[inline(always)]
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    #[inline(always)]
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    /// Machine epsilon of the representation.
    fn epsilon() -> f64;
}

impl Real for f64 {
    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline(always)]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline(always)]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline(always)]
    fn max(self, other: Self) -> Self {
        f64::max(self, other)
    }
    #[inline(always)]
    fn cos_approx(self) -> Self {
        self.cos()
    }
    #[inline(always)]
    fn sin_approx(self) -> Self {
        self.sin()
    }
    #[inline(always)]
    fn epsilon() -> f64 {
        f64::EPSILON
    }
}

impl Real for Dd {
    #[inline(always)]
    fn from_f64(x: f64) -> Self {
        Dd::from_f64(x)
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
    #[inline(always)]
    fn abs(self) -> Self {
        Dd::abs(self)
    }
    #[inline(always)]
    fn sqrt(self) -> Self {
        Dd::sqrt(self)
    }
    #[inline(always)]
    fn max(self, other: Self) -> Self {
        Dd::max(self, other)
    }
    #[inline(always)]
    fn cos_approx(self) -> Self {
        Dd::cos_approx(self)
    }
    #[inline(always)]
    fn sin_approx(self) -> Self {
        Dd::sin_approx(self)
    }
    #[inline(always)]
    fn epsilon() -> f64 {
        // 2^-106
        1.232595164407831e-32
    }
}
