//! Voxel-wise inference and evaluation: dense patch classification,
//! connected-component false-positive rejection against the novelty mask,
//! and Dice scores over the standard tumor regions.

use rayon::prelude::*;

use crate::autoencoder::{argmax, NetworkRole, TrainedNetwork};
use crate::error::{Error, Result};
use crate::novelty::{nd_map, otsu_binarize, DEFAULT_OTSU_BINS};
use crate::scalar::Scalar;
use crate::volume::{Dims, LabelVolume, Mask, Sequence, Study, Volume};

/// Evaluation regions: whole tumor (classes 1-4), tumor core (1, 3, 4),
/// active tumor (4).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    WholeTumor,
    TumorCore,
    ActiveTumor,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::WholeTumor, Region::TumorCore, Region::ActiveTumor];

    pub fn contains(self, class: u8) -> bool {
        match self {
            Region::WholeTumor => (1..=4).contains(&class),
            Region::TumorCore => class == 1 || class == 3 || class == 4,
            Region::ActiveTumor => class == 4,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Region::WholeTumor => "WT",
            Region::TumorCore => "TC",
            Region::ActiveTumor => "AT",
        }
    }
}

/// Where a label map came from.
#[derive(Debug, Clone, Default)]
pub struct LabelMapProvenance {
    pub network_digest: String,
    pub postprocessed: bool,
}

/// Per-voxel class predictions plus provenance.
#[derive(Debug, Clone)]
pub struct LabelMap {
    pub labels: LabelVolume,
    pub provenance: LabelMapProvenance,
}

impl LabelMap {
    pub fn dims(&self) -> Dims {
        self.labels.dims
    }
}

const INFER_CHUNK: usize = 512;

/// Classifies the center voxel of every valid patch: class = argmax of the
/// softmax over the five classes (ties to the lowest index). The border
/// band where no full window fits is class 0.
pub fn predict_volume<F: Scalar>(
    net: &TrainedNetwork<F>,
    study: &Study<F>,
    p: usize,
) -> Result<LabelMap> {
    if net.role != NetworkRole::SdaeClassifier {
        return Err(Error::parameter("prediction needs a classifier network"));
    }
    let dims = study.dims();
    if p % 2 == 0 || p == 0 || p > dims.nx || p > dims.ny {
        return Err(Error::parameter(format!(
            "patch size {p} invalid for slices {}x{}",
            dims.nx, dims.ny
        )));
    }
    let vols: Vec<&Volume<F>> =
        Sequence::ALL.iter().map(|&s| study.require(s)).collect::<Result<_>>()?;
    let vec_len = 4 * p * p;
    if net.network.input_dim() != vec_len {
        return Err(Error::shape(format!(
            "network input {} does not match 4 x {p} x {p} = {vec_len}",
            net.network.input_dim()
        )));
    }

    let h = p / 2;
    let n_classes = net.n_classes();
    let slice_len = dims.nx * dims.ny;
    let mut classes = vec![0u8; dims.len()];

    classes.par_chunks_mut(slice_len).enumerate().try_for_each(
        |(z, out_slice)| -> Result<()> {
            let centers: Vec<(usize, usize)> = (h..=dims.ny - 1 - h)
                .flat_map(|cy| (h..=dims.nx - 1 - h).map(move |cx| (cx, cy)))
                .collect();
            let mut input = Vec::new();
            for chunk in centers.chunks(INFER_CHUNK) {
                input.clear();
                for &(cx, cy) in chunk {
                    for vol in &vols {
                        for r in 0..p {
                            let start = vol.dims.idx(cx - h, cy - h + r, z);
                            input.extend_from_slice(&vol.voxels[start..start + p]);
                        }
                    }
                }
                let probs = net.network.infer_batch(&input, chunk.len())?;
                for (i, &(cx, cy)) in chunk.iter().enumerate() {
                    let row = &probs[i * n_classes..(i + 1) * n_classes];
                    out_slice[cy * dims.nx + cx] = argmax(row) as u8;
                }
            }
            Ok(())
        },
    )?;

    Ok(LabelMap {
        labels: LabelVolume::new(dims, classes)?,
        provenance: LabelMapProvenance::default(),
    })
}

/// How a blocked sequence is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DropFill {
    /// The normalized background value.
    #[default]
    Zero,
    /// The mean over all voxels of the sequence being dropped.
    Mean,
}

/// Blocks one sequence from the input by replacing its voxels wholesale;
/// the study must actually contain the sequence.
pub fn drop_sequence<F: Scalar>(
    study: &Study<F>,
    seq: Sequence,
    fill: DropFill,
) -> Result<Study<F>> {
    let vol = study.require(seq)?;
    let value = match fill {
        DropFill::Zero => F::zero(),
        DropFill::Mean => {
            let sum: f64 = vol.voxels.iter().map(|v| v.to_f64_s()).sum();
            F::from_f64(sum / vol.voxels.len() as f64)
        }
    };
    let mut out = study.clone();
    out.replace(seq, Volume { dims: vol.dims, voxels: vec![value; vol.voxels.len()] })?;
    Ok(out)
}

/// Voxel connectivity for component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    /// Face neighbors only.
    Six,
    /// Faces, edges, and corners.
    #[default]
    TwentySix,
}

impl Connectivity {
    fn offsets(self) -> Vec<(isize, isize, isize)> {
        match self {
            Connectivity::Six => {
                vec![(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
            }
            Connectivity::TwentySix => {
                let mut o = Vec::with_capacity(26);
                for dz in -1isize..=1 {
                    for dy in -1isize..=1 {
                        for dx in -1isize..=1 {
                            if (dx, dy, dz) != (0, 0, 0) {
                                o.push((dx, dy, dz));
                            }
                        }
                    }
                }
                o
            }
        }
    }
}

/// Standard 3D component labeling. Labels start at 1 and are assigned in
/// the order components are first met in an x-fastest scan, which makes the
/// labeling deterministic.
pub fn connected_components(mask: &Mask, connectivity: Connectivity) -> (Vec<u32>, usize) {
    let dims = mask.dims;
    let offsets = connectivity.offsets();
    let mut labels = vec![0u32; dims.len()];
    let mut next = 0u32;
    let mut queue: Vec<usize> = Vec::new();

    for z in 0..dims.nz {
        for y in 0..dims.ny {
            for x in 0..dims.nx {
                let i = dims.idx(x, y, z);
                if !mask.voxels[i] || labels[i] != 0 {
                    continue;
                }
                next += 1;
                labels[i] = next;
                queue.push(i);
                while let Some(j) = queue.pop() {
                    let jz = j / (dims.nx * dims.ny);
                    let jy = (j / dims.nx) % dims.ny;
                    let jx = j % dims.nx;
                    for &(dx, dy, dz) in &offsets {
                        let (nx, ny, nz) =
                            (jx as isize + dx, jy as isize + dy, jz as isize + dz);
                        if nx < 0
                            || ny < 0
                            || nz < 0
                            || nx >= dims.nx as isize
                            || ny >= dims.ny as isize
                            || nz >= dims.nz as isize
                        {
                            continue;
                        }
                        let k = dims.idx(nx as usize, ny as usize, nz as usize);
                        if mask.voxels[k] && labels[k] == 0 {
                            labels[k] = next;
                            queue.push(k);
                        }
                    }
                }
            }
        }
    }
    (labels, next as usize)
}

/// Keeps only the predicted-lesion components that intersect the novelty
/// mask; all voxels of the other components are reset to class 0. Never
/// adds lesion voxels.
pub fn reject_false_positives(
    pred: &LabelMap,
    nd_mask: &Mask,
    connectivity: Connectivity,
) -> Result<LabelMap> {
    let dims = pred.dims();
    if nd_mask.dims != dims {
        return Err(Error::shape(format!(
            "mask dims {} do not match prediction dims {dims}",
            nd_mask.dims
        )));
    }
    let lesion = Mask {
        dims,
        voxels: pred.labels.voxels.iter().map(|&c| c != 0).collect(),
    };
    let (components, count) = connected_components(&lesion, connectivity);
    let mut keep = vec![false; count + 1];
    for (i, &label) in components.iter().enumerate() {
        if label != 0 && nd_mask.voxels[i] {
            keep[label as usize] = true;
        }
    }
    let mut out = pred.clone();
    for (i, &label) in components.iter().enumerate() {
        if label != 0 && !keep[label as usize] {
            out.labels.voxels[i] = 0;
        }
    }
    out.provenance.postprocessed = true;
    Ok(out)
}

/// Dice overlap `2|P∩G| / (|P|+|G|)` of one region's voxel sets; undefined
/// (`None`) when both sets are empty.
pub fn dice(pred: &LabelVolume, truth: &LabelVolume, region: Region) -> Result<Option<f64>> {
    if pred.dims != truth.dims {
        return Err(Error::shape(format!(
            "prediction dims {} do not match truth dims {}",
            pred.dims, truth.dims
        )));
    }
    let mut p_count = 0usize;
    let mut g_count = 0usize;
    let mut overlap = 0usize;
    for (&a, &b) in pred.voxels.iter().zip(&truth.voxels) {
        let in_p = region.contains(a);
        let in_g = region.contains(b);
        p_count += in_p as usize;
        g_count += in_g as usize;
        overlap += (in_p && in_g) as usize;
    }
    if p_count + g_count == 0 {
        return Ok(None);
    }
    Ok(Some(2.0 * overlap as f64 / (p_count + g_count) as f64))
}

/// Dice for all three regions at once.
pub fn region_scores(pred: &LabelVolume, truth: &LabelVolume) -> Result<RegionScores> {
    Ok(RegionScores {
        wt: dice(pred, truth, Region::WholeTumor)?,
        tc: dice(pred, truth, Region::TumorCore)?,
        at: dice(pred, truth, Region::ActiveTumor)?,
    })
}

/// WT/TC/AT dice of one study; `None` entries are undefined (both sets
/// empty), which is distinct from 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct RegionScores {
    pub wt: Option<f64>,
    pub tc: Option<f64>,
    pub at: Option<f64>,
}

impl RegionScores {
    pub fn get(&self, region: Region) -> Option<f64> {
        match region {
            Region::WholeTumor => self.wt,
            Region::TumorCore => self.tc,
            Region::ActiveTumor => self.at,
        }
    }
}

/// Mean, population standard deviation, and median over the defined scores
/// of a cohort; `n` counts the defined entries.
#[derive(Debug, Clone, Copy, Default)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub n: usize,
}

impl Aggregate {
    fn over(values: &[f64]) -> Option<Aggregate> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Some(Aggregate { mean, std: var.sqrt(), median, n })
    }
}

/// One study's evaluation outcome; failures are recorded, not fatal.
#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub id: String,
    pub raw: Option<RegionScores>,
    pub postprocessed: Option<RegionScores>,
    pub error: Option<String>,
}

/// Cohort-level evaluation report.
#[derive(Debug, Clone)]
pub struct DiceReport {
    pub per_study: Vec<StudyOutcome>,
    /// True when scores are from post-processed predictions.
    pub postprocessed: bool,
}

impl DiceReport {
    fn scores_of(&self, outcome: &StudyOutcome) -> Option<RegionScores> {
        if self.postprocessed {
            outcome.postprocessed
        } else {
            outcome.raw
        }
    }

    pub fn aggregate(&self, region: Region) -> Option<Aggregate> {
        let values: Vec<f64> = self
            .per_study
            .iter()
            .filter_map(|o| self.scores_of(o).and_then(|s| s.get(region)))
            .collect();
        Aggregate::over(&values)
    }

    /// Summary table: one row per region, mean / std / median columns.
    pub fn summary_tsv(&self) -> String {
        let mut out = String::from("region\tmean\tstd\tmedian\tn\n");
        for region in Region::ALL {
            match self.aggregate(region) {
                Some(a) => out.push_str(&format!(
                    "{}\t{:.4}\t{:.4}\t{:.4}\t{}\n",
                    region.short_name(),
                    a.mean,
                    a.std,
                    a.median,
                    a.n
                )),
                None => out.push_str(&format!("{}\t*\t*\t*\t0\n", region.short_name())),
            }
        }
        out
    }

    /// Per-study detail table; undefined scores print as `*`.
    pub fn detail_tsv(&self) -> String {
        let fmt = |v: Option<f64>| match v {
            Some(v) => format!("{v:.4}"),
            None => "*".to_string(),
        };
        let mut out = String::from("study\tWT\tTC\tAT\terror\n");
        for o in &self.per_study {
            let s = self.scores_of(o).unwrap_or_default();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                o.id,
                fmt(s.wt),
                fmt(s.tc),
                fmt(s.at),
                o.error.as_deref().unwrap_or("-")
            ));
        }
        out
    }
}

/// Options for cohort evaluation.
#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub patch_size: usize,
    pub connectivity: Connectivity,
    pub otsu_bins: usize,
    /// Run the ND-mask rejection step and report its scores.
    pub postprocess: bool,
    /// Also keep the raw (pre-rejection) scores for ablation reporting.
    pub keep_raw: bool,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        EvaluateOptions {
            patch_size: 21,
            connectivity: Connectivity::TwentySix,
            otsu_bins: DEFAULT_OTSU_BINS,
            postprocess: true,
            keep_raw: true,
        }
    }
}

/// Runs predict -> nd_map -> Otsu -> reject -> dice for every study and
/// aggregates the scores. Per-study failures are recorded in the report
/// without aborting the cohort. Studies evaluate in parallel; the report
/// order is the input order.
pub fn evaluate_cohort<F: Scalar>(
    studies: &[(String, Study<F>)],
    net: &TrainedNetwork<F>,
    nd_net: &TrainedNetwork<F>,
    options: &EvaluateOptions,
) -> Result<DiceReport> {
    let per_study: Vec<StudyOutcome> = studies
        .par_iter()
        .map(|(id, study)| {
            match evaluate_study(study, net, nd_net, options) {
                Ok((raw, post)) => StudyOutcome {
                    id: id.clone(),
                    raw: Some(raw),
                    postprocessed: post,
                    error: None,
                },
                Err(e) => StudyOutcome {
                    id: id.clone(),
                    raw: None,
                    postprocessed: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(DiceReport { per_study, postprocessed: options.postprocess })
}

fn evaluate_study<F: Scalar>(
    study: &Study<F>,
    net: &TrainedNetwork<F>,
    nd_net: &TrainedNetwork<F>,
    options: &EvaluateOptions,
) -> Result<(RegionScores, Option<RegionScores>)> {
    let truth = study.require_labels()?;
    let pred = predict_volume(net, study, options.patch_size)?;
    let raw = region_scores(&pred.labels, truth)?;
    if !options.postprocess {
        return Ok((raw, None));
    }
    let map = nd_map(study, nd_net, options.patch_size, 1)?;
    let (_, mask) = otsu_binarize(&map, options.otsu_bins)?;
    let rejected = reject_false_positives(&pred, &mask, options.connectivity)?;
    let post = region_scores(&rejected.labels, truth)?;
    Ok((raw, Some(post)))
}
