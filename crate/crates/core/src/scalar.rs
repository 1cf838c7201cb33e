//! Scalar fields for measures, step functions and operators.
//!
//! Everything downstream of the metric solve is generic over [`Scalar`]. The
//! standard word metric produces masses in ℚ and Radon-Nikodym square roots in
//! ℚ(√(2k−1)), so [`QuadSurd`](crate::QuadSurd) carries those computations
//! with zero rounding; weighted and Green metrics run in `f64`.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Whether arithmetic in this type is free of rounding.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// `None` when `x` has no faithful representation (e.g. 1/3 for an exact type).
    fn from_f64(x: f64) -> Option<Self>;

    /// Real part as a float.
    fn to_f64(&self) -> f64;

    /// Modulus as a float.
    fn abs_f64(&self) -> f64;

    /// Principal square root of a nonnegative real value, `None` if it leaves the field.
    fn sqrt(&self) -> Option<Self>;

    fn conj(&self) -> Self;

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_ratio(num: i64, den: i64) -> Self {
                (num as f64 / den as f64) as $t
            }

            fn from_f64(x: f64) -> Option<Self> {
                x.is_finite().then_some(x as $t)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn abs_f64(&self) -> f64 {
                self.abs() as f64
            }

            fn sqrt(&self) -> Option<Self> {
                (*self >= 0.0).then(|| <$t>::sqrt(*self))
            }

            fn conj(&self) -> Self {
                *self
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for Complex<f64> {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        Complex::new(num as f64 / den as f64, 0.0)
    }

    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(Complex::new(x, 0.0))
    }

    fn to_f64(&self) -> f64 {
        self.re
    }

    fn abs_f64(&self) -> f64 {
        self.norm()
    }

    fn sqrt(&self) -> Option<Self> {
        Some(Complex::sqrt(*self))
    }

    fn conj(&self) -> Self {
        Complex::conj(self)
    }
}

/// `|a − b| ≤ tol·max(1, |a|, |b|)`, or exact equality for exact scalars.
pub fn close<S: Scalar>(a: &S, b: &S, tol: f64) -> bool {
    if S::EXACT {
        return a == b;
    }
    let scale = 1f64.max(a.abs_f64()).max(b.abs_f64());
    (a.clone() - b.clone()).abs_f64() <= tol * scale
}

/// Sum of an iterator of scalars.
pub fn sum<S: Scalar, I: IntoIterator<Item = S>>(items: I) -> S {
    items.into_iter().fold(S::zero(), |acc, x| acc + x)
}
