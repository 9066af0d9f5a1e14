//! Scalar abstraction for frequency fractions, utilizations and energy.
//!
//! Time is always integer ticks; only ratios are generic. `f64` is the
//! default everywhere, `f32` is supported for callers that want it.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts a literal. Panics only if the literal is not representable,
    /// which cannot happen for the finite constants used in this crate.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn from_ticks(ticks: u64) -> Self {
        Self::from_u64(ticks).expect("tick count representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Service ticks needed by `len` nominal ticks of compute at frequency
/// fraction `phi`: `ceil(len / phi)`.
///
/// Quotients within a few ulps of an integer snap to that integer so that
/// e.g. `3 / (0.1 * 3)` yields 10 rather than 11.
pub fn stretch<T: Scalar>(len: u64, phi: T) -> u64 {
    if phi >= T::one() {
        return len;
    }
    let q = T::from_ticks(len) / phi;
    let nearest = q.round();
    let slack = nearest.max(T::one()) * T::epsilon() * T::lit(8.0);
    let ticks = if (q - nearest).abs() <= slack { nearest } else { q.ceil() };
    ticks.to_u64().unwrap_or(u64::MAX)
}

/// `numerator / denominator` as a scalar fraction.
pub fn ratio<T: Scalar>(numerator: u64, denominator: u64) -> T {
    if denominator == 0 {
        return T::zero();
    }
    T::from_ticks(numerator) / T::from_ticks(denominator)
}
