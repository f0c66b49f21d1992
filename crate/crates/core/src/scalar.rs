//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All solvers are written against [`Scalar`], implemented for `f32` and
//! `f64`. Tolerances are per-type because single precision cannot honour the
//! double-precision pivot and feasibility thresholds.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Smallest magnitude accepted as a simplex pivot.
    const PIVOT_TOL: Self;
    /// Primal feasibility tolerance (absolute, scaled by `1 + |rhs|`).
    const FEAS_TOL: Self;
    /// Reduced-cost optimality tolerance.
    const OPT_TOL: Self;
    /// Tolerance for a probability vector summing to one.
    const PROB_SUM_TOL: Self;

    /// Converts an `f64` literal. Panics only if the target cannot hold a
    /// finite double, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar to f64")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }
}

impl Scalar for f64 {
    const PIVOT_TOL: f64 = 1e-9;
    const FEAS_TOL: f64 = 1e-7;
    const OPT_TOL: f64 = 1e-9;
    const PROB_SUM_TOL: f64 = 1e-12;
}

impl Scalar for f32 {
    const PIVOT_TOL: f32 = 1e-5;
    const FEAS_TOL: f32 = 1e-4;
    const OPT_TOL: f32 = 1e-5;
    const PROB_SUM_TOL: f32 = 1e-6;
}

/// Harmonic number `H_n = 1 + 1/2 + ... + 1/n`; `H_0 = 0`.
pub fn harmonic<T: Scalar>(n: usize) -> T {
    (1..=n).map(|k| T::one() / T::from_count(k)).sum()
}

/// Dot product over equal-length slices.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Euclidean norm.
#[inline]
pub fn norm2<T: Scalar>(a: &[T]) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_numbers() {
        assert_eq!(harmonic::<f64>(0), 0.0);
        assert!((harmonic::<f64>(2) - 1.5).abs() < 1e-15);
        assert!((harmonic::<f32>(3) - 11.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn literal_roundtrip() {
        assert_eq!(f32::lit(0.25), 0.25f32);
        assert_eq!(f64::half(), 0.5);
        assert_eq!(norm2(&[3.0f64, 4.0]), 5.0);
    }
}
