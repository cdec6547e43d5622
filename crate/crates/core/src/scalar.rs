//! Scalar abstraction shared by the numerical modules.
//!
//! Everything that is pure arithmetic over correlations (beliefs, grids,
//! likelihoods, metrics) is written against [`Real`] so it can run in `f32`
//! or `f64`. Special functions are evaluated in `f64` and narrowed.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }

    /// Smallest step that bisection can still resolve at magnitude ~1.
    fn resolution() -> Self;
}

impl Real for f32 {
    fn resolution() -> Self {
        4.0 * f32::EPSILON
    }
}

impl Real for f64 {
    fn resolution() -> Self {
        4.0 * f64::EPSILON
    }
}

/// Standard normal CDF, accurate in both tails.
pub fn std_normal_cdf<T: Real>(x: T) -> T {
    T::lit(0.5 * libm::erfc(-x.as_f64() / std::f64::consts::SQRT_2))
}

/// `Φ(hi) − Φ(lo)` for `lo ≤ hi`, without cancellation in either tail.
pub fn std_normal_mass<T: Real>(lo: T, hi: T) -> T {
    use libm::{erf, erfc};
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (lo, hi) = (lo.as_f64(), hi.as_f64());
    let mass = if lo >= 0.0 {
        0.5 * (erfc(lo * r) - erfc(hi * r))
    } else if hi <= 0.0 {
        0.5 * (erfc(-hi * r) - erfc(-lo * r))
    } else {
        0.5 * (erf(hi * r) + erf(-lo * r))
    };
    T::lit(mass.max(0.0))
}

/// Standard normal density.
pub fn std_normal_pdf<T: Real>(x: T) -> T {
    let inv_sqrt_2pi = T::lit(0.398_942_280_401_432_7);
    inv_sqrt_2pi * (-(x * x) / T::lit(2.0)).exp()
}

/// `sign(x)` with `sign(0) = 0`.
pub(crate) fn sign<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}
