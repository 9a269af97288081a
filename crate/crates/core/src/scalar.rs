use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point score type used by transition models and decoding.
pub trait Score: Float + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static {
    fn from_f64_lossy(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 converts to any float score")
    }

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("float score converts to f64")
    }
}

impl Score for f32 {}
impl Score for f64 {}

