//! Scalar abstraction shared by the bound and distribution code.
//!
//! Everything in [`crate::analysis`] that only needs field operations is written
//! against [`Scalar`], so the same routine can be evaluated exactly
//! (`BigRational`) when checking a bound, or in `f64`/`f32` when producing
//! plot data.

use std::fmt::Debug;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, ToPrimitive, Zero};

pub trait Scalar: Num + Clone + Debug + PartialOrd + FromPrimitive + ToPrimitive + Send + Sync {
    /// `2^e`, exact for rational scalars.
    fn pow2(e: i32) -> Self;

    fn from_biguint(v: &BigUint) -> Self;

    /// Allowed deviation of a probability sum from 1; zero for exact scalars.
    fn sum_tolerance() -> Self;

    fn powi(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc * self.clone();
        }
        acc
    }
}

macro_rules! float_scalar {
    ($($t:ty)*) => ($(
        impl Scalar for $t {
            fn pow2(e: i32) -> Self {
                (2.0 as $t).powi(e)
            }

            fn from_biguint(v: &BigUint) -> Self {
                v.to_f64().map(|x| x as $t).unwrap_or(<$t>::INFINITY)
            }

            fn sum_tolerance() -> Self {
                (<$t>::EPSILON * 1024.0) as $t
            }

            fn powi(&self, k: u32) -> Self {
                <$t>::powi(*self, k as i32)
            }
        }
    )*)
}

float_scalar!(f32 f64);

impl Scalar for BigRational {
    fn pow2(e: i32) -> Self {
        let p = BigInt::one() << e.unsigned_abs();
        if e >= 0 {
            BigRational::from_integer(p)
        } else {
            BigRational::new(BigInt::one(), p)
        }
    }

    fn from_biguint(v: &BigUint) -> Self {
        BigRational::from_integer(BigInt::from(v.clone()))
    }

    fn sum_tolerance() -> Self {
        BigRational::zero()
    }
}

/// Exact rational from a ratio of counts.
pub fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    assert!(!den.is_zero(), "zero denominator");
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
