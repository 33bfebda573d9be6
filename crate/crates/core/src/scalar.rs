//! Floating point abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the statistics are computed in: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant representable in scalar type")
    }

    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Arithmetic mean. Returns NaN for an empty slice.
pub(crate) fn mean<S: Scalar>(values: &[S]) -> S {
    values.iter().copied().sum::<S>() / S::of_usize(values.len())
}

/// Sample standard deviation with divisor `n - 1`.
pub(crate) fn sample_sd<S: Scalar>(values: &[S]) -> S {
    let m = mean(values);
    let ss: S = values.iter().map(|&v| (v - m) * (v - m)).sum();
    (ss / S::of_usize(values.len() - 1)).sqrt()
}
