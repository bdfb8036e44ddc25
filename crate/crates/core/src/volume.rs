//! Volumes, label maps, and co-registered multi-sequence studies.
//!
//! A [`Volume`] is one 3D scalar field stored x-fastest; a [`Study`] bundles
//! the co-registered MR sequences of one patient (FLAIR, T2, T1, T1c, in
//! that fixed order) together with an optional ground-truth label volume.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of voxel classes (healthy/background plus four lesion classes).
pub const NUM_CLASSES: usize = 5;

/// Voxel class values: 0 healthy/background, 1 necrotic region, 2 edema,
/// 3 non-enhancing tumor, 4 enhancing tumor.
pub fn is_valid_class(c: u8) -> bool {
    (c as usize) < NUM_CLASSES
}

/// Volume dimensions `(nx, ny, nz)`; voxels are stored x-fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims { nx, ny, nz }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline(always)]
    pub fn idx(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.nx && y < self.ny && z < self.nz);
        x + self.nx * (y + self.ny * z)
    }

    /// Voxel index range of axial slice `z`.
    #[inline]
    pub fn slice_range(&self, z: usize) -> std::ops::Range<usize> {
        let n = self.nx * self.ny;
        z * n..(z + 1) * n
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

/// One intensity volume (a single MR sequence or error map).
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<F: Scalar> {
    pub dims: Dims,
    pub voxels: Vec<F>,
}

impl<F: Scalar> Volume<F> {
    pub fn new(dims: Dims, voxels: Vec<F>) -> Result<Self> {
        if voxels.len() != dims.len() {
            return Err(Error::shape(format!(
                "volume {} needs {} voxels, got {}",
                dims,
                dims.len(),
                voxels.len()
            )));
        }
        Ok(Volume { dims, voxels })
    }

    pub fn zeros(dims: Dims) -> Self {
        Volume { dims, voxels: vec![F::zero(); dims.len()] }
    }

    #[inline(always)]
    pub fn get(&self, x: usize, y: usize, z: usize) -> F {
        self.voxels[self.dims.idx(x, y, z)]
    }

    #[inline(always)]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: F) {
        let i = self.dims.idx(x, y, z);
        self.voxels[i] = v;
    }

    /// Converts voxel precision, e.g. `f32` file data into an `f64` test volume.
    pub fn cast<G: Scalar>(&self) -> Volume<G> {
        Volume {
            dims: self.dims,
            voxels: self.voxels.iter().map(|v| G::from_f64(v.to_f64_s())).collect(),
        }
    }
}

/// One label volume; values are restricted to the five voxel classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVolume {
    pub dims: Dims,
    pub voxels: Vec<u8>,
}

impl LabelVolume {
    pub fn new(dims: Dims, voxels: Vec<u8>) -> Result<Self> {
        if voxels.len() != dims.len() {
            return Err(Error::shape(format!(
                "label volume {} needs {} voxels, got {}",
                dims,
                dims.len(),
                voxels.len()
            )));
        }
        if let Some(bad) = voxels.iter().find(|&&c| !is_valid_class(c)) {
            return Err(Error::data(format!("label value {bad} outside 0..={}", NUM_CLASSES - 1)));
        }
        Ok(LabelVolume { dims, voxels })
    }

    pub fn zeros(dims: Dims) -> Self {
        LabelVolume { dims, voxels: vec![0; dims.len()] }
    }

    #[inline(always)]
    pub fn get(&self, x: usize, y: usize, z: usize) -> u8 {
        self.voxels[self.dims.idx(x, y, z)]
    }

    #[inline(always)]
    pub fn set(&mut self, x: usize, y: usize, z: usize, c: u8) {
        debug_assert!(is_valid_class(c));
        let i = self.dims.idx(x, y, z);
        self.voxels[i] = c;
    }

    /// Per-class voxel counts, indexed by class value.
    pub fn class_histogram(&self) -> [usize; NUM_CLASSES] {
        let mut h = [0usize; NUM_CLASSES];
        for &c in &self.voxels {
            h[c as usize] += 1;
        }
        h
    }
}

/// A binary voxel mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub dims: Dims,
    pub voxels: Vec<bool>,
}

impl Mask {
    pub fn new(dims: Dims, voxels: Vec<bool>) -> Result<Self> {
        if voxels.len() != dims.len() {
            return Err(Error::shape(format!(
                "mask {} needs {} voxels, got {}",
                dims,
                dims.len(),
                voxels.len()
            )));
        }
        Ok(Mask { dims, voxels })
    }

    pub fn zeros(dims: Dims) -> Self {
        Mask { dims, voxels: vec![false; dims.len()] }
    }

    #[inline(always)]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.voxels[self.dims.idx(x, y, z)]
    }

    #[inline(always)]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: bool) {
        let i = self.dims.idx(x, y, z);
        self.voxels[i] = v;
    }

    pub fn count(&self) -> usize {
        self.voxels.iter().filter(|&&v| v).count()
    }
}

/// The four MR sequences, in vectorization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sequence {
    Flair,
    T2,
    T1,
    T1c,
}

impl Sequence {
    pub const ALL: [Sequence; 4] = [Sequence::Flair, Sequence::T2, Sequence::T1, Sequence::T1c];

    pub fn index(self) -> usize {
        match self {
            Sequence::Flair => 0,
            Sequence::T2 => 1,
            Sequence::T1 => 2,
            Sequence::T1c => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sequence::Flair => "FLAIR",
            Sequence::T2 => "T2",
            Sequence::T1 => "T1",
            Sequence::T1c => "T1c",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FLAIR" => Ok(Sequence::Flair),
            "T2" => Ok(Sequence::T2),
            "T1" => Ok(Sequence::T1),
            "T1C" => Ok(Sequence::T1c),
            _ => Err(Error::parameter(format!("unknown sequence name `{s}`"))),
        }
    }
}

impl std::fmt::Display for Sequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// An ordered set of co-registered sequences plus optional ground truth.
///
/// Sequences may be absent (e.g. a two-sequence study used only for novelty
/// detection); all present volumes must share dimensions.
#[derive(Debug, Clone)]
pub struct Study<F: Scalar> {
    dims: Dims,
    sequences: [Option<Volume<F>>; 4],
    pub labels: Option<LabelVolume>,
}

impl<F: Scalar> Study<F> {
    pub fn new(
        sequences: Vec<(Sequence, Volume<F>)>,
        labels: Option<LabelVolume>,
    ) -> Result<Self> {
        let dims = sequences
            .first()
            .map(|(_, v)| v.dims)
            .or(labels.as_ref().map(|l| l.dims))
            .ok_or_else(|| Error::data("study needs at least one volume"))?;
        let mut slots: [Option<Volume<F>>; 4] = [None, None, None, None];
        for (seq, vol) in sequences {
            if vol.dims != dims {
                return Err(Error::shape(format!(
                    "sequence {seq} has dims {}, study has {dims}",
                    vol.dims
                )));
            }
            if slots[seq.index()].is_some() {
                return Err(Error::data(format!("duplicate sequence {seq}")));
            }
            slots[seq.index()] = Some(vol);
        }
        if let Some(l) = &labels {
            if l.dims != dims {
                return Err(Error::shape(format!(
                    "label volume has dims {}, study has {dims}",
                    l.dims
                )));
            }
        }
        Ok(Study { dims, sequences: slots, labels })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn sequence(&self, seq: Sequence) -> Option<&Volume<F>> {
        self.sequences[seq.index()].as_ref()
    }

    /// The named sequence, or a data error naming it when absent.
    pub fn require(&self, seq: Sequence) -> Result<&Volume<F>> {
        self.sequence(seq)
            .ok_or_else(|| Error::data(format!("study is missing sequence {seq}")))
    }

    pub fn has(&self, seq: Sequence) -> bool {
        self.sequences[seq.index()].is_some()
    }

    pub fn replace(&mut self, seq: Sequence, vol: Volume<F>) -> Result<()> {
        if vol.dims != self.dims {
            return Err(Error::shape(format!(
                "replacement {seq} has dims {}, study has {}",
                vol.dims, self.dims
            )));
        }
        self.sequences[seq.index()] = Some(vol);
        Ok(())
    }

    pub fn require_labels(&self) -> Result<&LabelVolume> {
        self.labels.as_ref().ok_or_else(|| Error::data("study has no label volume"))
    }
}
