//! Scalar abstraction for embeddings, scores and metrics.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type used for similarity scores, embeddings and metrics.
///
/// Implemented for `f32` and `f64`. Masks and pixels are integer data and are
/// never parameterized over this trait.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal or computed constant.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    /// Converts a count.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable in every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Ratio of two counts, in the scalar's precision.
#[inline]
pub(crate) fn ratio<T: Scalar>(num: usize, den: usize) -> T {
    T::count(num) / T::count(den)
}
