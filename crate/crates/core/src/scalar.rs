//! Scalar abstraction for the numeric kernels.
//!
//! Everything sampled on a grid (fields, averages, norms, maximal values,
//! weight constants) is generic over a floating-point scalar. Exact lattice
//! arithmetic (the `1/m` eccentricity, plane indices, cell indices) is kept
//! in integers and lives in [`crate::delta`] and [`crate::geometry`].

use std::fmt;
use std::iter::Sum;
use std::num::ParseFloatError;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + FromStr<Err = ParseFloatError>
    + fmt::Display
    + fmt::Debug
    + Send
    + Sync
    + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 value not representable in scalar type")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize value not representable in scalar type")
    }

    fn of_i64(n: i64) -> Self {
        Self::from_i64(n).expect("i64 value not representable in scalar type")
    }

    fn to64(self) -> f64 {
        self.to_f64().expect("scalar value not representable as f64")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::one() / Self::two()
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + FromStr<Err = ParseFloatError>
        + fmt::Display
        + fmt::Debug
        + Send
        + Sync
        + 'static
{
}

/// Deterministic pairwise summation with a fixed recursive split.
///
/// The split depends only on the slice length, so the result is identical
/// across runs and independent of any thread count.
pub fn pairwise_sum<S: Scalar>(xs: &[S]) -> S {
    if xs.len() <= 32 {
        let mut acc = S::zero();
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// `|x|^p` with exact handling of the common exponents.
pub fn pow_abs<S: Scalar>(x: S, p: S) -> S {
    let a = x.abs();
    if p == S::one() {
        a
    } else if p == S::two() {
        a * a
    } else {
        a.powf(p)
    }
}

/// `x^{1/p}` with exact handling of the common exponents.
pub fn root<S: Scalar>(x: S, p: S) -> S {
    if p == S::one() {
        x
    } else if p == S::two() {
        x.sqrt()
    } else {
        x.powf(S::one() / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_sequential_on_dyadic_values() {
        // Values with few mantissa bits sum exactly in any order.
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 256) as f64 / 256.0).collect();
        let seq: f64 = xs.iter().sum();
        assert_eq!(pairwise_sum(&xs), seq);
    }

    #[test]
    fn pow_abs_special_cases() {
        assert_eq!(pow_abs(-3.0f64, 1.0), 3.0);
        assert_eq!(pow_abs(-3.0f64, 2.0), 9.0);
        assert!((pow_abs(2.0f64, 1.5) - 2.0f64.powf(1.5)).abs() == 0.0);
    }
}
