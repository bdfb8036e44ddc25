//! Masking noise: the corruption used for denoising pre-training.

use crate::error::{Error, Result};
use crate::rng::SeedRng;
use crate::scalar::Scalar;

/// Zeroes exactly `round(fraction * len)` distinct positions of `v`,
/// chosen uniformly without replacement; the rest are left untouched.
pub fn mask_corrupt<F: Scalar>(v: &[F], fraction: f64, rng: &mut SeedRng) -> Result<Vec<F>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::parameter(format!("masking fraction {fraction} outside [0, 1]")));
    }
    let mut out = v.to_vec();
    mask_corrupt_in_place(&mut out, fraction, rng);
    Ok(out)
}

/// In-place variant for the training hot path; `fraction` must already be
/// validated to lie in `[0, 1]`.
pub fn mask_corrupt_in_place<F: Scalar>(v: &mut [F], fraction: f64, rng: &mut SeedRng) {
    debug_assert!((0.0..=1.0).contains(&fraction));
    let k = (fraction * v.len() as f64).round() as usize;
    if k == 0 {
        return;
    }
    for i in rng.choose_distinct(v.len(), k) {
        v[i] = F::zero();
    }
}
