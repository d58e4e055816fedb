//! Scalar abstraction for similarity weights, scores and summary statistics.
//!
//! Intersections and unions are always exact integer counts; the scalar type
//! only decides the precision in which their ratios and aggregates are
//! reported.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type usable for weights and statistics.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// `num / den` evaluated in this precision.
    #[inline]
    fn ratio(num: u64, den: u64) -> Self {
        Self::from_u64(num).unwrap() / Self::from_u64(den).unwrap()
    }

    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).unwrap()
    }

    #[inline]
    fn hundred() -> Self {
        Self::from_u8(100).unwrap()
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}
