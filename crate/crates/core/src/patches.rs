//! Multi-sequence 2D patch extraction, vectorization, and rotation
//! augmentation.
//!
//! Patches are axial `p x p` windows (p odd) stacked over sequences in the
//! fixed order (FLAIR, T2, T1, T1c); a vectorized patch is the
//! concatenation of the row-major windows, giving `n_sequences * p * p`
//! components. A voxel can be a patch center only when the full window fits
//! inside its slice; the surrounding border band is never sampled anywhere
//! in the system.

use crate::error::{Error, Result};
use crate::rng::SeedRng;
use crate::scalar::Scalar;
use crate::volume::{Sequence, Study, Volume};

/// A matrix of vectorized patches with optional labels and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchBatch<F: Scalar> {
    data: Vec<F>,
    pub labels: Option<Vec<u8>>,
    pub centers: Option<Vec<(usize, usize, usize)>>,
    patch_size: usize,
    n_sequences: usize,
}

impl<F: Scalar> PatchBatch<F> {
    pub fn new(
        data: Vec<F>,
        labels: Option<Vec<u8>>,
        centers: Option<Vec<(usize, usize, usize)>>,
        patch_size: usize,
        n_sequences: usize,
    ) -> Result<Self> {
        if n_sequences != 2 && n_sequences != 4 {
            return Err(Error::parameter(format!(
                "patch batches carry 2 or 4 sequences, not {n_sequences}"
            )));
        }
        if patch_size % 2 == 0 {
            return Err(Error::parameter(format!("patch size {patch_size} must be odd")));
        }
        let vec_len = n_sequences * patch_size * patch_size;
        if data.len() % vec_len != 0 {
            return Err(Error::shape(format!(
                "patch data of {} values is not a multiple of vec_len {vec_len}",
                data.len()
            )));
        }
        let n = data.len() / vec_len;
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::shape("label count does not match patch count"));
            }
        }
        if let Some(c) = &centers {
            if c.len() != n {
                return Err(Error::shape("center count does not match patch count"));
            }
        }
        Ok(PatchBatch { data, labels, centers, patch_size, n_sequences })
    }

    fn empty(patch_size: usize, n_sequences: usize, labeled: bool) -> Self {
        PatchBatch {
            data: Vec::new(),
            labels: labeled.then(Vec::new),
            centers: Some(Vec::new()),
            patch_size,
            n_sequences,
        }
    }

    pub fn len(&self) -> usize {
        if self.vec_len() == 0 {
            0
        } else {
            self.data.len() / self.vec_len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn vec_len(&self) -> usize {
        self.n_sequences * self.patch_size * self.patch_size
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn n_sequences(&self) -> usize {
        self.n_sequences
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[F] {
        let w = self.vec_len();
        &self.data[i * w..(i + 1) * w]
    }

    /// Rows `sel` of this batch, in the given order.
    pub fn gather(&self, sel: &[usize]) -> PatchBatch<F> {
        let w = self.vec_len();
        let mut data = Vec::with_capacity(sel.len() * w);
        for &i in sel {
            data.extend_from_slice(self.row(i));
        }
        PatchBatch {
            data,
            labels: self.labels.as_ref().map(|l| sel.iter().map(|&i| l[i]).collect()),
            centers: self.centers.as_ref().map(|c| sel.iter().map(|&i| c[i]).collect()),
            patch_size: self.patch_size,
            n_sequences: self.n_sequences,
        }
    }

    /// Deterministically keeps at most `max` patches, evenly spread over the
    /// batch (every k-th row).
    pub fn thin_to(&self, max: usize) -> PatchBatch<F> {
        if self.len() <= max || max == 0 {
            return self.clone();
        }
        let sel: Vec<usize> =
            (0..max).map(|i| i * self.len() / max).collect();
        self.gather(&sel)
    }
}

fn check_patch_geometry(p: usize, stride: usize, nx: usize, ny: usize) -> Result<usize> {
    if p % 2 == 0 || p == 0 {
        return Err(Error::parameter(format!("patch size {p} must be odd and positive")));
    }
    if stride == 0 {
        return Err(Error::parameter("stride must be at least 1"));
    }
    if p > nx || p > ny {
        return Err(Error::parameter(format!(
            "patch size {p} exceeds slice extent {nx}x{ny}"
        )));
    }
    Ok(p / 2)
}

/// Stride-spaced center grid along one axis: `h, h+stride, ...` up to the
/// last position where the window still fits.
fn grid(h: usize, n: usize, stride: usize) -> impl Iterator<Item = usize> {
    (h..=n - 1 - h).step_by(stride)
}

/// Copies the `p x p` window of `vol` centered at `(cx, cy, z)` into `out`,
/// row-major (y outer, x inner).
fn copy_window<F: Scalar>(
    vol: &Volume<F>,
    cx: usize,
    cy: usize,
    z: usize,
    p: usize,
    out: &mut Vec<F>,
) {
    let h = p / 2;
    let dims = vol.dims;
    for r in 0..p {
        let y = cy - h + r;
        let start = dims.idx(cx - h, y, z);
        out.extend_from_slice(&vol.voxels[start..start + p]);
    }
}

fn vectorize<F: Scalar>(
    volumes: &[&Volume<F>],
    cx: usize,
    cy: usize,
    z: usize,
    p: usize,
    out: &mut Vec<F>,
) {
    for vol in volumes {
        copy_window(vol, cx, cy, z, p, out);
    }
}

/// Unlabeled systematic sampling: a sliding window over every axial slice,
/// all four sequences, ignoring any labels.
pub fn extract_systematic<F: Scalar>(
    study: &Study<F>,
    p: usize,
    stride: usize,
) -> Result<PatchBatch<F>> {
    let dims = study.dims();
    let h = check_patch_geometry(p, stride, dims.nx, dims.ny)?;
    let vols: Vec<&Volume<F>> =
        Sequence::ALL.iter().map(|&s| study.require(s)).collect::<Result<_>>()?;

    let mut batch = PatchBatch::empty(p, 4, false);
    for z in 0..dims.nz {
        for cy in grid(h, dims.ny, stride) {
            for cx in grid(h, dims.nx, stride) {
                vectorize(&vols, cx, cy, z, p, &mut batch.data);
                batch.centers.as_mut().unwrap().push((cx, cy, z));
            }
        }
    }
    Ok(batch)
}

/// Labeled sampling restricted, per slice, to the bounding box of nonzero
/// labels dilated by `margin`; each patch carries the class of its center
/// voxel. All four sequences. An unlabeled-everywhere study yields an
/// empty batch (with a warning) rather than an error.
pub fn extract_vicinity<F: Scalar>(
    study: &Study<F>,
    margin: usize,
    p: usize,
    stride: usize,
) -> Result<PatchBatch<F>> {
    let dims = study.dims();
    let h = check_patch_geometry(p, stride, dims.nx, dims.ny)?;
    let labels = study.require_labels()?;
    let vols: Vec<&Volume<F>> =
        Sequence::ALL.iter().map(|&s| study.require(s)).collect::<Result<_>>()?;

    let mut batch = PatchBatch::empty(p, 4, true);
    for z in 0..dims.nz {
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for y in 0..dims.ny {
            for x in 0..dims.nx {
                if labels.get(x, y, z) != 0 {
                    let b = bbox.get_or_insert((x, x, y, y));
                    b.0 = b.0.min(x);
                    b.1 = b.1.max(x);
                    b.2 = b.2.min(y);
                    b.3 = b.3.max(y);
                }
            }
        }
        let Some((x0, x1, y0, y1)) = bbox else { continue };
        let (x0, x1) = (x0.saturating_sub(margin), x1 + margin);
        let (y0, y1) = (y0.saturating_sub(margin), y1 + margin);
        for cy in grid(h, dims.ny, stride) {
            if cy < y0 || cy > y1 {
                continue;
            }
            for cx in grid(h, dims.nx, stride) {
                if cx < x0 || cx > x1 {
                    continue;
                }
                vectorize(&vols, cx, cy, z, p, &mut batch.data);
                batch.labels.as_mut().unwrap().push(labels.get(cx, cy, z));
                batch.centers.as_mut().unwrap().push((cx, cy, z));
            }
        }
    }
    if batch.is_empty() {
        log::warn!("extract_vicinity: study has no labeled voxels; empty batch");
    }
    Ok(batch)
}

/// FLAIR+T2 patches for novelty-detector training: systematic centers whose
/// window contains no lesion voxel at all and overlaps brain (at least half
/// the window nonzero in FLAIR or T2). Unlabeled by construction.
pub fn extract_nonlesion<F: Scalar>(
    study: &Study<F>,
    p: usize,
    stride: usize,
) -> Result<PatchBatch<F>> {
    let dims = study.dims();
    let h = check_patch_geometry(p, stride, dims.nx, dims.ny)?;
    let labels = study.require_labels()?;
    let flair = study.require(Sequence::Flair)?;
    let t2 = study.require(Sequence::T2)?;
    let vols = [flair, t2];
    let min_brain = (p * p).div_ceil(2);

    let mut batch = PatchBatch::empty(p, 2, false);
    for z in 0..dims.nz {
        for cy in grid(h, dims.ny, stride) {
            for cx in grid(h, dims.nx, stride) {
                let mut clean = true;
                let mut brain = 0usize;
                'window: for y in cy - h..=cy + h {
                    for x in cx - h..=cx + h {
                        if labels.get(x, y, z) != 0 {
                            clean = false;
                            break 'window;
                        }
                        if flair.get(x, y, z) != F::zero() || t2.get(x, y, z) != F::zero() {
                            brain += 1;
                        }
                    }
                }
                if clean && brain >= min_brain {
                    vectorize(&vols, cx, cy, z, p, &mut batch.data);
                    batch.centers.as_mut().unwrap().push((cx, cy, z));
                }
            }
        }
    }
    Ok(batch)
}

/// Rotation angles used for augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationAngle {
    Plus90,
    Minus90,
    Half,
    Plus45,
    Minus45,
}

impl RotationAngle {
    pub fn parse(deg: i32) -> Result<Self> {
        match deg {
            90 => Ok(RotationAngle::Plus90),
            -90 => Ok(RotationAngle::Minus90),
            180 => Ok(RotationAngle::Half),
            45 => Ok(RotationAngle::Plus45),
            -45 => Ok(RotationAngle::Minus45),
            _ => Err(Error::parameter(format!("unsupported rotation angle {deg}"))),
        }
    }
}

/// Rotates a vectorized multi-sequence patch about its center.
///
/// Right angles are exact index permutations; the 45-degree rotations use
/// bilinear interpolation with out-of-support positions filled with 0 (the
/// background value after z-scoring).
pub fn rotate_patch<F: Scalar>(
    patch: &[F],
    p: usize,
    n_sequences: usize,
    angle: RotationAngle,
) -> Result<Vec<F>> {
    let plane = p * p;
    if patch.len() != n_sequences * plane {
        return Err(Error::shape(format!(
            "patch of {} values is not {n_sequences} x {p} x {p}",
            patch.len()
        )));
    }
    let mut out = vec![F::zero(); patch.len()];
    for s in 0..n_sequences {
        let src = &patch[s * plane..(s + 1) * plane];
        let dst = &mut out[s * plane..(s + 1) * plane];
        match angle {
            RotationAngle::Plus90 => {
                for r in 0..p {
                    for c in 0..p {
                        dst[r * p + c] = src[c * p + (p - 1 - r)];
                    }
                }
            }
            RotationAngle::Minus90 => {
                for r in 0..p {
                    for c in 0..p {
                        dst[r * p + c] = src[(p - 1 - c) * p + r];
                    }
                }
            }
            RotationAngle::Half => {
                for r in 0..p {
                    for c in 0..p {
                        dst[r * p + c] = src[(p - 1 - r) * p + (p - 1 - c)];
                    }
                }
            }
            RotationAngle::Plus45 | RotationAngle::Minus45 => {
                let theta = match angle {
                    RotationAngle::Plus45 => std::f64::consts::FRAC_PI_4,
                    _ => -std::f64::consts::FRAC_PI_4,
                };
                let (sin, cos) = theta.sin_cos();
                let center = (p - 1) as f64 / 2.0;
                for r in 0..p {
                    for c in 0..p {
                        // Pull: sample the source at the inverse rotation.
                        let dy = r as f64 - center;
                        let dx = c as f64 - center;
                        let sx = cos * dx + sin * dy + center;
                        let sy = -sin * dx + cos * dy + center;
                        dst[r * p + c] = bilinear(src, p, sx, sy);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn bilinear<F: Scalar>(plane: &[F], p: usize, x: f64, y: f64) -> F {
    if x < 0.0 || y < 0.0 || x > (p - 1) as f64 || y > (p - 1) as f64 {
        return F::zero();
    }
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(p - 1);
    let y1 = (y0 + 1).min(p - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let v00 = plane[y0 * p + x0].to_f64_s();
    let v01 = plane[y0 * p + x1].to_f64_s();
    let v10 = plane[y1 * p + x0].to_f64_s();
    let v11 = plane[y1 * p + x1].to_f64_s();
    let top = v00 * (1.0 - fx) + v01 * fx;
    let bot = v10 * (1.0 - fx) + v11 * fx;
    F::from_f64(top * (1.0 - fy) + bot * fy)
}

/// Augmentation policies: one rotated copy per patch for single-time-point
/// data, all three right angles for longitudinal data, and the five-angle
/// scheme that grows the training data six-fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentPolicy {
    StOneOfThree,
    LtAllThree,
    LggFive,
}

impl AugmentPolicy {
    fn angles(self) -> &'static [RotationAngle] {
        match self {
            AugmentPolicy::StOneOfThree | AugmentPolicy::LtAllThree => &[
                RotationAngle::Plus90,
                RotationAngle::Minus90,
                RotationAngle::Half,
            ],
            AugmentPolicy::LggFive => &[
                RotationAngle::Plus90,
                RotationAngle::Minus90,
                RotationAngle::Half,
                RotationAngle::Plus45,
                RotationAngle::Minus45,
            ],
        }
    }
}

/// Appends label-preserving rotated copies to a labeled batch.
///
/// `StOneOfThree` draws one right angle per patch from the seed;
/// `LtAllThree` appends all three right angles; `LggFive` appends all five
/// angles. Appended rows keep the source row's label and center.
pub fn augment<F: Scalar>(
    batch: &PatchBatch<F>,
    policy: AugmentPolicy,
    rng: &mut SeedRng,
) -> Result<PatchBatch<F>> {
    let labels =
        batch.labels.as_ref().ok_or_else(|| Error::data("augment needs a labeled batch"))?;
    let p = batch.patch_size;
    let n_seq = batch.n_sequences;
    let mut out = batch.clone();

    let mut push = |out: &mut PatchBatch<F>, i: usize, angle: RotationAngle| -> Result<()> {
        let rotated = rotate_patch(batch.row(i), p, n_seq, angle)?;
        out.data.extend_from_slice(&rotated);
        out.labels.as_mut().unwrap().push(labels[i]);
        if let (Some(c), Some(src)) = (out.centers.as_mut(), batch.centers.as_ref()) {
            c.push(src[i]);
        }
        Ok(())
    };

    match policy {
        AugmentPolicy::StOneOfThree => {
            let angles = policy.angles();
            for i in 0..batch.len() {
                push(&mut out, i, angles[rng.index(angles.len())])?;
            }
        }
        AugmentPolicy::LtAllThree | AugmentPolicy::LggFive => {
            for &angle in policy.angles() {
                for i in 0..batch.len() {
                    push(&mut out, i, angle)?;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Dims, LabelVolume};

    fn test_study(nx: usize, ny: usize, nz: usize, labels: Option<LabelVolume>) -> Study<f32> {
        let dims = Dims::new(nx, ny, nz);
        let mk = |offset: f32| {
            let voxels =
                (0..dims.len()).map(|i| offset + (i % 97) as f32 * 0.01 + 1.0).collect();
            Volume::new(dims, voxels).unwrap()
        };
        Study::new(
            vec![
                (Sequence::Flair, mk(0.0)),
                (Sequence::T2, mk(10.0)),
                (Sequence::T1, mk(20.0)),
                (Sequence::T1c, mk(30.0)),
            ],
            labels,
        )
        .unwrap()
    }

    #[test]
    fn systematic_grid_enumeration() {
        // 41x41 slice, p=21, stride=10: centers at {10, 20, 30} each axis.
        let study = test_study(41, 41, 1, None);
        let batch = extract_systematic(&study, 21, 10).unwrap();
        assert_eq!(batch.len(), 9);
        assert_eq!(batch.vec_len(), 1764);
        let centers = batch.centers.as_ref().unwrap();
        for &(x, y, _) in centers {
            assert!([10, 20, 30].contains(&x) && [10, 20, 30].contains(&y));
        }
    }

    #[test]
    fn systematic_single_fit() {
        let study = test_study(21, 21, 1, None);
        let batch = extract_systematic(&study, 21, 10).unwrap();
        assert_eq!(batch.len(), 1);
        assert_eq!(batch.centers.as_ref().unwrap()[0], (10, 10, 0));
    }

    #[test]
    fn oversized_patch_rejected() {
        let study = test_study(16, 16, 1, None);
        assert!(extract_systematic(&study, 21, 1).is_err());
        assert!(extract_systematic(&study, 4, 1).is_err()); // even
        assert!(extract_systematic(&study, 5, 0).is_err()); // stride
    }

    #[test]
    fn vectorization_order_and_roundtrip() {
        let study = test_study(7, 7, 2, None);
        let batch = extract_systematic(&study, 3, 1).unwrap();
        let (cx, cy, cz) = batch.centers.as_ref().unwrap()[3];
        let row = batch.row(3);
        // Sequence blocks in (FLAIR, T2, T1, T1c) order, row-major windows.
        for (s, seq) in Sequence::ALL.iter().enumerate() {
            let vol = study.sequence(*seq).unwrap();
            for r in 0..3 {
                for c in 0..3 {
                    let expected = vol.get(cx - 1 + c, cy - 1 + r, cz);
                    assert_eq!(row[s * 9 + r * 3 + c], expected);
                }
            }
        }
    }

    #[test]
    fn vicinity_box_arithmetic() {
        let dims = Dims::new(61, 61, 1);
        let mut labels = LabelVolume::zeros(dims);
        labels.set(30, 30, 0, 2);
        let study = test_study(61, 61, 1, Some(labels));
        let batch = extract_vicinity(&study, 10, 21, 1).unwrap();
        let centers = batch.centers.as_ref().unwrap();
        assert!(!centers.is_empty());
        for &(x, y, _) in centers {
            assert!((20..=40).contains(&x) && (20..=40).contains(&y));
        }
        // Full box is reachable: 21x21 centers.
        assert_eq!(batch.len(), 441);
        // Center patch is labeled with the center voxel's class.
        let idx = centers.iter().position(|&c| c == (30, 30, 0)).unwrap();
        assert_eq!(batch.labels.as_ref().unwrap()[idx], 2);
    }

    #[test]
    fn vicinity_without_lesion_is_empty() {
        let dims = Dims::new(31, 31, 2);
        let study = test_study(31, 31, 2, Some(LabelVolume::zeros(dims)));
        let batch = extract_vicinity(&study, 10, 5, 1).unwrap();
        assert!(batch.is_empty());
    }

    #[test]
    fn nonlesion_excludes_dirty_windows() {
        let dims = Dims::new(41, 41, 1);
        let mut labels = LabelVolume::zeros(dims);
        labels.set(10, 10, 0, 4); // pollutes every window containing it
        let study = test_study(41, 41, 1, Some(labels));
        let batch = extract_nonlesion(&study, 21, 10).unwrap();
        assert_eq!(batch.vec_len(), 882);
        let centers = batch.centers.as_ref().unwrap();
        // (10,10) sits inside windows centered at {10,20} x {10,20}.
        assert!(!centers.contains(&(10, 10, 0)));
        assert!(!centers.contains(&(20, 20, 0)));
        assert!(centers.contains(&(30, 30, 0)));
    }

    #[test]
    fn nonlesion_matches_systematic_on_clean_brain() {
        let dims = Dims::new(41, 41, 1);
        let study = test_study(41, 41, 1, Some(LabelVolume::zeros(dims)));
        let batch = extract_nonlesion(&study, 21, 10).unwrap();
        assert_eq!(batch.len(), 9);
    }

    #[test]
    fn lesion_filling_slice_yields_nothing() {
        let dims = Dims::new(25, 25, 1);
        let labels = LabelVolume::new(dims, vec![2; dims.len()]).unwrap();
        let study = test_study(25, 25, 1, Some(labels));
        let batch = extract_nonlesion(&study, 21, 2).unwrap();
        assert!(batch.is_empty());
    }

    fn ramp_patch(p: usize, n_seq: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(p * p * n_seq);
        for s in 0..n_seq {
            for r in 0..p {
                for c in 0..p {
                    v.push(s as f64 * 10.0 + r as f64 * 0.31 + c as f64 * 0.17);
                }
            }
        }
        v
    }

    #[test]
    fn quarter_turns_form_a_group() {
        let p = 9;
        let patch = ramp_patch(p, 2);
        let mut v = patch.clone();
        for _ in 0..4 {
            v = rotate_patch(&v, p, 2, RotationAngle::Plus90).unwrap();
        }
        assert_eq!(v, patch);

        let twice = rotate_patch(
            &rotate_patch(&patch, p, 2, RotationAngle::Plus90).unwrap(),
            p,
            2,
            RotationAngle::Plus90,
        )
        .unwrap();
        let half = rotate_patch(&patch, p, 2, RotationAngle::Half).unwrap();
        assert_eq!(twice, half);

        let back = rotate_patch(
            &rotate_patch(&patch, p, 2, RotationAngle::Plus90).unwrap(),
            p,
            2,
            RotationAngle::Minus90,
        )
        .unwrap();
        assert_eq!(back, patch);
    }

    #[test]
    fn right_angles_preserve_value_multiset() {
        let p = 7;
        let patch = ramp_patch(p, 1);
        for angle in [RotationAngle::Plus90, RotationAngle::Minus90, RotationAngle::Half] {
            let mut rotated = rotate_patch(&patch, p, 1, angle).unwrap();
            let mut original = patch.clone();
            rotated.sort_by(|a, b| a.partial_cmp(b).unwrap());
            original.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(rotated, original);
        }
    }

    #[test]
    fn forty_five_roundtrip_center_block() {
        // +45 then -45 on a linear ramp: bilinear interpolation reproduces
        // linear functions, so the center 11x11 of a 21x21 patch (which
        // never touches the zero fill) comes back close to the original.
        let p = 21;
        let patch = ramp_patch(p, 1);
        let there = rotate_patch(&patch, p, 1, RotationAngle::Plus45).unwrap();
        let back = rotate_patch(&there, p, 1, RotationAngle::Minus45).unwrap();
        for r in 5..16 {
            for c in 5..16 {
                let a = patch[r * p + c];
                let b = back[r * p + c];
                assert!((a - b).abs() < 0.15, "({r},{c}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn rotation_rejects_unknown_angle() {
        assert!(RotationAngle::parse(37).is_err());
        assert!(RotationAngle::parse(-45).is_ok());
    }

    fn labeled_batch(n: usize) -> PatchBatch<f32> {
        let p = 5;
        let data: Vec<f32> = (0..n * p * p * 4).map(|i| i as f32 * 0.01).collect();
        let labels: Vec<u8> = (0..n).map(|i| (i % 5) as u8).collect();
        let centers: Vec<(usize, usize, usize)> = (0..n).map(|i| (i, i, 0)).collect();
        PatchBatch::new(data, Some(labels), Some(centers), p, 4).unwrap()
    }

    #[test]
    fn augment_row_counts() {
        let batch = labeled_batch(12);
        let mut rng = SeedRng::new(3);
        let st = augment(&batch, AugmentPolicy::StOneOfThree, &mut rng).unwrap();
        assert_eq!(st.len(), 24);
        let lt = augment(&batch, AugmentPolicy::LtAllThree, &mut rng).unwrap();
        assert_eq!(lt.len(), 48);
        let lgg = augment(&batch, AugmentPolicy::LggFive, &mut rng).unwrap();
        assert_eq!(lgg.len(), 72); // 6x including originals
    }

    #[test]
    fn augment_preserves_labels() {
        let batch = labeled_batch(10);
        let mut rng = SeedRng::new(8);
        let out = augment(&batch, AugmentPolicy::LggFive, &mut rng).unwrap();
        let labels = out.labels.as_ref().unwrap();
        for block in 0..6 {
            for i in 0..10 {
                assert_eq!(labels[block * 10 + i], (i % 5) as u8);
            }
        }
    }

    #[test]
    fn augment_requires_labels() {
        let p = 3;
        let data = vec![0.0f32; 2 * p * p * 4];
        let batch = PatchBatch::new(data, None, None, p, 4).unwrap();
        assert!(augment(&batch, AugmentPolicy::LtAllThree, &mut SeedRng::new(0)).is_err());
    }

    #[test]
    fn extraction_is_deterministic() {
        let dims = Dims::new(33, 33, 3);
        let mut labels = LabelVolume::zeros(dims);
        labels.set(16, 16, 1, 2);
        labels.set(17, 16, 1, 4);
        let study = test_study(33, 33, 3, Some(labels));
        let a = extract_vicinity(&study, 6, 9, 2).unwrap();
        let b = extract_vicinity(&study, 6, 9, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn thin_to_spreads_selection() {
        let batch = labeled_batch(10);
        let thinned = batch.thin_to(4);
        assert_eq!(thinned.len(), 4);
        assert_eq!(
            thinned.centers.as_ref().unwrap(),
            &vec![(0, 0, 0), (2, 2, 0), (5, 5, 0), (7, 7, 0)]
        );
    }
}
