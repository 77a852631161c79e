//! Scalar abstraction shared by every numeric module.
//!
//! All of the channel, coding and loading math is written against
//! [`Scalar`], which both `f32` and `f64` implement. The reproduction
//! targets and the CLI run in `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst};

pub trait Scalar:
    Float + FloatConst + Debug + Display + LowerExp + FromStr + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal; exact for `f64`, rounded for `f32`.
    fn lit(x: f64) -> Self;

    /// Converts a count.
    fn from_usize(n: usize) -> Self {
        Self::lit(n as f64)
    }

    fn to_f64_lossy(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// Power ratio to decibels.
#[inline]
pub fn to_db<T: Scalar>(x: T) -> T {
    T::lit(10.0) * x.log10()
}

/// Decibels to power ratio.
#[inline]
pub fn from_db<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// `2^b - 1` for an integer order.
#[inline]
pub(crate) fn pow2_minus_one<T: Scalar>(bits: u32) -> T {
    T::lit(2.0).powi(bits as i32) - T::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_roundtrip() {
        for &x in &[1e-9, 0.5, 1.0, 9.45799578725972, 1e7] {
            let back: f64 = from_db(to_db(x));
            assert!((back - x).abs() <= 1e-14 * x);
        }
        assert_eq!(to_db(10.0f32), 10.0);
    }

    #[test]
    fn pow2() {
        assert_eq!(pow2_minus_one::<f64>(0), 0.0);
        assert_eq!(pow2_minus_one::<f64>(10), 1023.0);
    }
}
