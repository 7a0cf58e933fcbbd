//! Scalar abstraction shared by the algebraic parts of the crate.
//!
//! Matrix transforms, the decomposition maps, reproduction rates and bridge
//! algebra are written once against [`Scalar`] and instantiated with `f64`
//! for simulation, `f32` where memory matters, and [`Exact`] (arbitrary
//! precision rationals) where identities must hold without rounding.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational scalar.
pub type Exact = BigRational;

pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Converts a float, exactly when the target can represent it.
    fn from_f64_lossy(x: f64) -> Self;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits every scalar")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half(&self) -> Self {
        self.clone() / Self::two()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    /// `|a - b| <= tol`.
    fn approx_eq(a: &Self, b: &Self, tol: &Self) -> bool {
        (a.clone() - b.clone()).abs() <= *tol
    }

    fn is_finite_value(&self) -> bool;
}

impl Scalar for f64 {
    fn from_f64_lossy(x: f64) -> Self {
        x
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    fn from_f64_lossy(x: f64) -> Self {
        x as f32
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for BigRational {
    fn from_f64_lossy(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(BigRational::zero)
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

/// Builds an exact rational `num / den`.
pub fn ratio(num: i64, den: i64) -> Exact {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Integer power by repeated multiplication; `pow(x, 0) == 1` including `x == 0`.
pub fn powi<T: Scalar>(x: &T, k: usize) -> T {
    num_traits::pow(x.clone(), k)
}
