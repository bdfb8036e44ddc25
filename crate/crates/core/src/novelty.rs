//! Reconstruction-error novelty detection.
//!
//! The novelty detector reconstructs FLAIR+T2 patches it was trained on
//! (non-lesion tissue); lesions reconstruct badly, so per-voxel maps of the
//! reconstruction error localize them. Two map variants:
//!
//! - ND: each valid center voxel receives the mean reconstruction error of
//!   the patch centered on it, `sum(E) / (2 p^2)` with `E` the per-pixel
//!   patch error summed over the two sequences.
//! - CND: each voxel accumulates the patch error `E` at its offset from
//!   every overlapping patch, a cumulative sum over up to `p^2` windows.
//!
//! Maps are binarized with Otsu's threshold or a mean+k*sigma rule; the
//! border band where no full patch fits is marked invalid and holds zero.

use rayon::prelude::*;

use crate::autoencoder::{NetworkRole, TrainedNetwork};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::volume::{Dims, Mask, Sequence, Study, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMapKind {
    Nd,
    Cnd,
}

/// Per-voxel reconstruction-error field.
#[derive(Debug, Clone)]
pub struct ErrorMap<F: Scalar> {
    pub dims: Dims,
    pub values: Vec<F>,
    pub kind: ErrorMapKind,
    /// False in the border band (and, for strided ND previews, at skipped
    /// voxels); invalid voxels hold 0 and are excluded from statistics.
    pub valid: Vec<bool>,
}

impl<F: Scalar> ErrorMap<F> {
    pub fn valid_values(&self) -> impl Iterator<Item = F> + '_ {
        self.values.iter().zip(&self.valid).filter(|(_, &m)| m).map(|(v, _)| *v)
    }

    /// The error map as a plain intensity volume (for MVOL serialization).
    pub fn to_volume(&self) -> Volume<F> {
        Volume { dims: self.dims, voxels: self.values.clone() }
    }
}

/// Elementwise patch error of Eq-style form: `(RF-F)^2 + (RT-T)^2`.
pub fn patch_error<F: Scalar>(
    flair: &[F],
    t2: &[F],
    recon_flair: &[F],
    recon_t2: &[F],
) -> Result<Vec<F>> {
    if flair.len() != t2.len() || flair.len() != recon_flair.len() || t2.len() != recon_t2.len() {
        return Err(Error::shape("patch error needs four equal-shaped arrays"));
    }
    Ok(flair
        .iter()
        .zip(t2)
        .zip(recon_flair)
        .zip(recon_t2)
        .map(|(((f, t), rf), rt)| {
            let df = *rf - *f;
            let dt = *rt - *t;
            df * df + dt * dt
        })
        .collect())
}

fn check_nd_inputs<F: Scalar>(
    study: &Study<F>,
    nd: &TrainedNetwork<F>,
    p: usize,
) -> Result<(usize, usize, usize)> {
    if nd.role != NetworkRole::NoveltyDetector {
        return Err(Error::parameter("error maps need a novelty-detector network"));
    }
    let dims = study.dims();
    study.require(Sequence::Flair)?;
    study.require(Sequence::T2)?;
    if p % 2 == 0 || p == 0 || p > dims.nx || p > dims.ny {
        return Err(Error::parameter(format!(
            "patch size {p} invalid for slices {}x{}",
            dims.nx, dims.ny
        )));
    }
    let vec_len = 2 * p * p;
    if nd.network.input_dim() != vec_len {
        return Err(Error::shape(format!(
            "network input {} does not match 2 x {p} x {p} = {vec_len}",
            nd.network.input_dim()
        )));
    }
    Ok((dims.nx, dims.ny, dims.nz))
}

/// Centers on one slice, x fastest, with the given stride.
fn slice_centers(nx: usize, ny: usize, h: usize, stride: usize) -> Vec<(usize, usize)> {
    let mut centers = Vec::new();
    for cy in (h..=ny - 1 - h).step_by(stride) {
        for cx in (h..=nx - 1 - h).step_by(stride) {
            centers.push((cx, cy));
        }
    }
    centers
}

/// Builds the FLAIR+T2 input matrix for a set of centers on slice `z`.
fn gather_inputs<F: Scalar>(
    flair: &Volume<F>,
    t2: &Volume<F>,
    centers: &[(usize, usize)],
    z: usize,
    p: usize,
    out: &mut Vec<F>,
) {
    let h = p / 2;
    out.clear();
    for &(cx, cy) in centers {
        for vol in [flair, t2] {
            for r in 0..p {
                let start = vol.dims.idx(cx - h, cy - h + r, z);
                out.extend_from_slice(&vol.voxels[start..start + p]);
            }
        }
    }
}

const INFER_CHUNK: usize = 512;

/// Reconstruction-error map with one value per visited patch center
/// (Eq.-2 style): the mean of the patch error over `N = 2 p^2` components.
pub fn nd_map<F: Scalar>(
    study: &Study<F>,
    nd: &TrainedNetwork<F>,
    p: usize,
    stride: usize,
) -> Result<ErrorMap<F>> {
    let (nx, ny, _) = check_nd_inputs(study, nd, p)?;
    if stride == 0 {
        return Err(Error::parameter("stride must be at least 1"));
    }
    let dims = study.dims();
    let flair = study.require(Sequence::Flair)?;
    let t2 = study.require(Sequence::T2)?;
    let h = p / 2;
    let centers = slice_centers(nx, ny, h, stride);
    let vec_len = 2 * p * p;

    let mut values = vec![F::zero(); dims.len()];
    let mut valid = vec![false; dims.len()];
    let slice_len = nx * ny;

    values
        .par_chunks_mut(slice_len)
        .zip(valid.par_chunks_mut(slice_len))
        .enumerate()
        .try_for_each(|(z, (val_slice, ok_slice))| -> Result<()> {
            let mut input = Vec::new();
            for chunk in centers.chunks(INFER_CHUNK) {
                gather_inputs(flair, t2, chunk, z, p, &mut input);
                let recon = nd.network.infer_batch(&input, chunk.len())?;
                for (i, &(cx, cy)) in chunk.iter().enumerate() {
                    let x_row = &input[i * vec_len..(i + 1) * vec_len];
                    let r_row = &recon[i * vec_len..(i + 1) * vec_len];
                    let mut acc = 0.0f64;
                    for (x, r) in x_row.iter().zip(r_row) {
                        let d = r.to_f64_s() - x.to_f64_s();
                        acc += d * d;
                    }
                    val_slice[cy * nx + cx] = F::from_f64(acc / vec_len as f64);
                    ok_slice[cy * nx + cx] = true;
                }
            }
            Ok(())
        })?;

    Ok(ErrorMap { dims, values, kind: ErrorMapKind::Nd, valid })
}

/// Cascaded map (Eq.-4 style): every voxel accumulates the patch error `E`
/// at its offset within every overlapping patch, in one dense stride-1 pass
/// per slice; the border band is invalid and zeroed.
pub fn cnd_map<F: Scalar>(
    study: &Study<F>,
    nd: &TrainedNetwork<F>,
    p: usize,
) -> Result<ErrorMap<F>> {
    let (nx, ny, _) = check_nd_inputs(study, nd, p)?;
    let dims = study.dims();
    let flair = study.require(Sequence::Flair)?;
    let t2 = study.require(Sequence::T2)?;
    let h = p / 2;
    let centers = slice_centers(nx, ny, h, 1);
    let vec_len = 2 * p * p;
    let plane = p * p;

    let mut values = vec![F::zero(); dims.len()];
    let mut valid = vec![false; dims.len()];
    let slice_len = nx * ny;

    values
        .par_chunks_mut(slice_len)
        .zip(valid.par_chunks_mut(slice_len))
        .enumerate()
        .try_for_each(|(z, (val_slice, ok_slice))| -> Result<()> {
            let mut acc = vec![0.0f64; slice_len];
            let mut input = Vec::new();
            for chunk in centers.chunks(INFER_CHUNK) {
                gather_inputs(flair, t2, chunk, z, p, &mut input);
                let recon = nd.network.infer_batch(&input, chunk.len())?;
                for (i, &(cx, cy)) in chunk.iter().enumerate() {
                    let x_row = &input[i * vec_len..(i + 1) * vec_len];
                    let r_row = &recon[i * vec_len..(i + 1) * vec_len];
                    for r in 0..p {
                        let row_base = (cy - h + r) * nx + (cx - h);
                        for c in 0..p {
                            let k = r * p + c;
                            let df = r_row[k].to_f64_s() - x_row[k].to_f64_s();
                            let dt = r_row[plane + k].to_f64_s() - x_row[plane + k].to_f64_s();
                            acc[row_base + c] += df * df + dt * dt;
                        }
                    }
                }
            }
            // Only the band where full patches fit is reported.
            for cy in h..=ny - 1 - h {
                for cx in h..=nx - 1 - h {
                    let i = cy * nx + cx;
                    val_slice[i] = F::from_f64(acc[i]);
                    ok_slice[i] = true;
                }
            }

            Ok(())
        })?;

    Ok(ErrorMap { dims, values, kind: ErrorMapKind::Cnd, valid })
}

/// Default number of histogram bins for Otsu binarization.
pub const DEFAULT_OTSU_BINS: usize = 256;

/// Otsu's threshold over a histogram of the valid voxels: picks the bin
/// split maximizing between-class variance, then masks values strictly
/// above the threshold. Ties go to the lowest threshold.
pub fn otsu_binarize<F: Scalar>(map: &ErrorMap<F>, bins: usize) -> Result<(f64, Mask)> {
    if bins < 2 {
        return Err(Error::parameter("otsu needs at least 2 bins"));
    }
    let vals: Vec<f64> = map.valid_values().map(|v| v.to_f64_s()).collect();
    if vals.len() < 2 {
        return Err(Error::Degenerate("fewer than 2 valid voxels".into()));
    }
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(Error::Degenerate("error map is constant over valid voxels".into()));
    }

    let width = (max - min) / bins as f64;
    let mut hist = vec![0u64; bins];
    for v in &vals {
        let b = (((v - min) / width) as usize).min(bins - 1);
        hist[b] += 1;
    }

    let total = vals.len() as f64;
    let total_sum: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let mut w_b = 0.0f64;
    let mut sum_b = 0.0f64;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for t in 0..bins - 1 {
        w_b += hist[t] as f64;
        if w_b == 0.0 {
            continue;
        }
        let w_f = total - w_b;
        if w_f == 0.0 {
            break;
        }
        sum_b += t as f64 * hist[t] as f64;
        let m_b = sum_b / w_b;
        let m_f = (total_sum - sum_b) / w_f;
        let var = w_b * w_f * (m_b - m_f) * (m_b - m_f);
        if var > best.0 {
            best = (var, t);
        }
    }

    let threshold = min + width * (best.1 + 1) as f64;
    let mask = threshold_mask(map, threshold);
    Ok((threshold, mask))
}

/// Masks valid voxels more than `k` standard deviations above the mean of
/// the valid voxels.
pub fn sigma_binarize<F: Scalar>(map: &ErrorMap<F>, k: f64) -> Result<Mask> {
    let (mut sum, mut count) = (0.0f64, 0usize);
    for v in map.valid_values() {
        sum += v.to_f64_s();
        count += 1;
    }
    if count < 2 {
        return Err(Error::Degenerate("fewer than 2 valid voxels".into()));
    }
    let mean = sum / count as f64;
    let var = map
        .valid_values()
        .map(|v| {
            let d = v.to_f64_s() - mean;
            d * d
        })
        .sum::<f64>()
        / count as f64;
    Ok(threshold_mask(map, mean + k * var.sqrt()))
}

fn threshold_mask<F: Scalar>(map: &ErrorMap<F>, threshold: f64) -> Mask {
    let voxels = map
        .values
        .iter()
        .zip(&map.valid)
        .map(|(v, &ok)| ok && v.to_f64_s() > threshold)
        .collect();
    Mask { dims: map.dims, voxels }
}
