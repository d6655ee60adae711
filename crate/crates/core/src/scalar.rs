//! Numeric traits shared by the metric and classifier code.
//!
//! Ratios, lags and precisions only need field arithmetic, so they are
//! written against [`Scalar`] and can be evaluated exactly with
//! [`Rational`]. Anything that needs `exp`/`ln` (BLEU) or is trained
//! online (perceptron weights) asks for [`Real`].

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Float, Num, ToPrimitive};

/// Exact rational used for closed-form checks.
pub type Rational = Ratio<i64>;

pub trait Scalar: Num + Clone + PartialOrd + Debug + Display + Send + Sync + 'static {
    /// Lossless conversion of a unit count.
    fn from_count(n: usize) -> Self;

    fn to_f64(&self) -> f64;
}

/// Floating-point scalar: f32 or f64.
pub trait Real: Scalar + Float + FromStr {}

impl Scalar for f32 {
    fn from_count(n: usize) -> Self {
        n as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for f64 {
    fn from_count(n: usize) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Rational {
    fn from_count(n: usize) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count exceeds i64"))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `num / den`, or zero when the denominator is zero.
pub(crate) fn ratio_or_zero<S: Scalar>(num: usize, den: usize) -> S {
    if den == 0 {
        S::zero()
    } else {
        S::from_count(num) / S::from_count(den)
    }
}
