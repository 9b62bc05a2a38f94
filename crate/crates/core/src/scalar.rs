//! Scalar abstraction for the numeric pipeline.
//!
//! Everything downstream of the symbolic layer (statement encoding, tensors,
//! LSTM training, sweep aggregation) is generic over [`Scalar`] so the same
//! code runs in `f32` (fast training) and `f64` (gradient checking).

use num_traits::{Float, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar usable throughout the numeric pipeline: f32 or f64.
pub trait Scalar: Float + NumAssign + Sum + Display + Debug + Send + Sync + 'static {
    fn from_f64(x: f64) -> Self;

    fn as_f64(self) -> f64;

    fn from_usize(x: usize) -> Self {
        Self::from_f64(x as f64)
    }
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn as_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }

    fn as_f64(self) -> f64 {
        self
    }
}
