//! Intensity normalization: histogram matching to a reference volume and
//! per-sequence z-scoring.
//!
//! Both operations compute their statistics over the "included" voxel set,
//! which by default is the strictly positive voxels: the data this pipeline
//! targets is skull-stripped, so background is exactly zero and would
//! otherwise dominate every statistic.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::volume::Volume;

/// Which voxels enter the statistics (and are remapped).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IncludeMode {
    /// Strictly positive voxels only; zeros (background) pass through
    /// untouched.
    #[default]
    PositiveOnly,
    /// Every voxel.
    All,
}

impl IncludeMode {
    #[inline]
    fn includes<F: Scalar>(self, v: F) -> bool {
        match self {
            IncludeMode::PositiveOnly => v > F::zero(),
            IncludeMode::All => true,
        }
    }
}

/// Default number of quantile levels for histogram matching.
pub const DEFAULT_LEVELS: usize = 1024;

/// Matches the included-voxel intensity distribution of `src` to that of
/// `reference` with default levels and the positive-voxel rule.
pub fn histogram_match<F: Scalar>(src: &Volume<F>, reference: &Volume<F>) -> Result<Volume<F>> {
    histogram_match_with(src, reference, DEFAULT_LEVELS, IncludeMode::PositiveOnly)
}

/// Monotone quantile mapping over `levels` levels.
///
/// Every included source voxel is ranked within the source distribution and
/// replaced by the reference value at the same quantile, quantized to
/// `levels` steps. Excluded voxels (background zeros under
/// [`IncludeMode::PositiveOnly`]) are returned unchanged. A source whose
/// included voxels are all equal carries no rank information; it maps
/// entirely to the reference median, with a warning.
pub fn histogram_match_with<F: Scalar>(
    src: &Volume<F>,
    reference: &Volume<F>,
    levels: usize,
    include: IncludeMode,
) -> Result<Volume<F>> {
    if levels < 2 {
        return Err(Error::parameter("histogram matching needs at least 2 levels"));
    }
    let mut ref_sorted: Vec<F> =
        reference.voxels.iter().copied().filter(|&v| include.includes(v)).collect();
    ref_sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite voxels"));
    if ref_sorted.is_empty() || ref_sorted[0] == ref_sorted[ref_sorted.len() - 1] {
        return Err(Error::data("reference needs at least 2 distinct included voxels"));
    }

    let mut src_sorted: Vec<F> =
        src.voxels.iter().copied().filter(|&v| include.includes(v)).collect();
    if src_sorted.is_empty() {
        return Ok(src.clone());
    }
    src_sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite voxels"));

    let mut out = src.clone();
    if src_sorted[0] == src_sorted[src_sorted.len() - 1] {
        log::warn!("histogram_match: constant source region; mapping to reference median");
        let median = ref_sorted[ref_sorted.len() / 2];
        for v in out.voxels.iter_mut() {
            if include.includes(*v) {
                *v = median;
            }
        }
        return Ok(out);
    }

    // Reference quantile table with `levels` entries.
    let table: Vec<F> = (0..levels)
        .map(|l| {
            let q = l as f64 / (levels - 1) as f64;
            ref_sorted[(q * (ref_sorted.len() - 1) as f64).round() as usize]
        })
        .collect();

    let n = src_sorted.len();
    for v in out.voxels.iter_mut() {
        if !include.includes(*v) {
            continue;
        }
        // Rank = number of strictly smaller included voxels; ties share a
        // rank, which keeps the mapping monotone non-decreasing.
        let rank = src_sorted.partition_point(|x| x < v);
        let u = if n > 1 { rank as f64 / (n - 1) as f64 } else { 0.0 };
        let level = (u * (levels - 1) as f64).round() as usize;
        *v = table[level.min(levels - 1)];
    }
    Ok(out)
}

/// Normalizes the included voxels to zero mean and unit population standard
/// deviation; excluded voxels pass through unchanged.
pub fn zscore<F: Scalar>(v: &Volume<F>, include: IncludeMode) -> Result<Volume<F>> {
    let (mut sum, mut count) = (0.0f64, 0usize);
    for &x in &v.voxels {
        if include.includes(x) {
            sum += x.to_f64_s();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Normalization("no included voxels".into()));
    }
    let mean = sum / count as f64;
    let mut var = 0.0f64;
    for &x in &v.voxels {
        if include.includes(x) {
            let d = x.to_f64_s() - mean;
            var += d * d;
        }
    }
    var /= count as f64;
    if var <= 0.0 {
        return Err(Error::Normalization("zero variance over included voxels".into()));
    }
    let std = var.sqrt();
    let mut out = v.clone();
    for x in out.voxels.iter_mut() {
        if include.includes(*x) {
            *x = F::from_f64((x.to_f64_s() - mean) / std);
        }
    }
    Ok(out)
}
