//! Scalar abstraction: the numeric kernels are generic over `f32`/`f64`.

use std::fmt::{Debug, Display};

use num_traits::Float;

/// Floating-point scalar usable for voxels, patches, and network parameters.
///
/// Production code runs on `f32` (see the `Real` alias at the crate root);
/// tests instantiate the same kernels with `f64` where an oracle needs the
/// extra headroom. Loss and gradient accumulation are always `f64`
/// regardless of `Self`, which is why the conversions are part of the trait.
pub trait Scalar: Float + Debug + Display + Default + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self;
    fn to_f64_s(self) -> f64;
}

impl Scalar for f32 {
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline(always)]
    fn to_f64_s(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline(always)]
    fn to_f64_s(self) -> f64 {
        self
    }
}
