//! Scalar abstraction for the real-valued parts of the toolkit.
//!
//! Cut-offs, specificity, class weights, metrics and the logistic baseline are
//! all generic over [`Real`], so the same code runs in `f32` or `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
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
    /// Lossy conversion from `f64`; used for literals and configuration values.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 is representable in every Real")
    }

    /// Ratio of two counts.
    fn ratio(num: usize, den: usize) -> Self {
        Self::of(num as f64) / Self::of(den as f64)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
