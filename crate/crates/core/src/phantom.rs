//! Synthetic multi-sequence studies for desk-scale verification.
//!
//! A phantom is an ellipsoidal "brain" (smooth random field plus Gaussian
//! noise on a positive base, zero outside) with spherical lesions built
//! from concentric class shells, outer to inner: edema (2), non-enhancing
//! tumor (3), necrotic region (1), enhancing core (4). Per-class intensity
//! offsets reproduce the qualitative sequence roles: edema is FLAIR/T2
//! hyperintense, and the enhancing core is distinguishable from necrosis
//! only through T1c. Everything is deterministic under the spec seed.

use crate::error::{Error, Result};
use crate::rng::SeedRng;
use crate::scalar::Scalar;
use crate::volume::{Dims, LabelVolume, Sequence, Study, Volume};

/// Additive intensity offsets in units of `noise_std`, indexed
/// `[class 1..=4][sequence]` with sequences in (FLAIR, T2, T1, T1c) order.
pub type ClassOffsets = [[f64; 4]; 4];

/// Shell boundaries as fractions of the lesion radius; a voxel at relative
/// radius `r` is class 4 below the per-lesion enhancing-core split, class 1
/// up to `class1_outer`, class 3 up to `class3_outer`, and edema (2) up
/// to 1.
///
/// The core split (the class 4 / class 1 boundary) is drawn per lesion
/// from `class4_outer_range`. The jitter matters: with a fixed split the
/// shell geometry alone would predict where necrosis ends and the
/// enhancing core begins, and the T1c channel would carry no exclusive
/// information about class 4.
#[derive(Debug, Clone, Copy)]
pub struct ShellLayout {
    pub class4_outer_range: (f64, f64),
    pub class1_outer: f64,
    pub class3_outer: f64,
}

impl ShellLayout {
    fn class_at(&self, relative_radius: f64, class4_outer: f64) -> u8 {
        if relative_radius <= class4_outer {
            4
        } else if relative_radius <= self.class1_outer {
            1
        } else if relative_radius <= self.class3_outer {
            3
        } else {
            2
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhantomSpec {
    pub dims: Dims,
    pub n_lesions: usize,
    /// Lesion radius range in voxels, sampled uniformly.
    pub radius_range: (f64, f64),
    pub shells: ShellLayout,
    pub offsets: ClassOffsets,
    pub base_intensity: f64,
    pub noise_std: f64,
    /// Amplitude of the smooth background field, in units of `noise_std`.
    pub smooth_amplitude: f64,
    /// Minimum in-plane margin between a lesion and the volume border, so
    /// every lesion voxel can be a patch center (half the patch size).
    pub border_margin: usize,
    pub seed: u64,
}

impl PhantomSpec {
    /// The default phantom family ("HGG-like" contrasts).
    ///
    /// Classes 1 and 4 share their FLAIR/T2/T1 profile and differ only in
    /// T1c, where the enhancing core is strongly hyperintense.
    pub fn default_family(dims: Dims, seed: u64) -> Self {
        PhantomSpec {
            dims,
            n_lesions: 1,
            radius_range: (6.5, 9.0),
            shells: ShellLayout {
                class4_outer_range: (0.15, 0.55),
                class1_outer: 0.62,
                class3_outer: 0.78,
            },
            offsets: [
                // FLAIR   T2    T1   T1c
                [2.0, 7.0, -6.0, 0.0],  // 1 necrotic
                [8.0, 6.0, -1.0, 0.0],  // 2 edema
                [4.0, 5.0, -4.0, 0.0],  // 3 non-enhancing
                [2.0, 7.0, -6.0, 8.0],  // 4 enhancing
            ],
            base_intensity: 400.0,
            noise_std: 10.0,
            smooth_amplitude: 3.0,
            border_margin: 11,
            seed,
        }
    }

    /// A contrast-shifted family ("LGG-like"): different shell thicknesses
    /// and offset profile, for the transfer-learning experiments.
    pub fn shifted_family(dims: Dims, seed: u64) -> Self {
        PhantomSpec {
            shells: ShellLayout {
                class4_outer_range: (0.12, 0.42),
                class1_outer: 0.50,
                class3_outer: 0.80,
            },
            offsets: [
                [3.0, 4.0, -5.0, 0.0],  // 1
                [5.0, 8.0, -3.0, 0.0],  // 2
                [6.0, 3.0, 2.0, 0.0],   // 3: T1 sign flipped
                [3.0, 4.0, -5.0, 6.0],  // 4
            ],
            base_intensity: 320.0,
            noise_std: 12.0,
            smooth_amplitude: 2.5,
            ..Self::default_family(dims, seed)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.radius_range.0 <= 0.0 || self.radius_range.0 > self.radius_range.1 {
            return Err(Error::parameter("lesion radius range must be ordered and positive"));
        }
        if self.noise_std <= 0.0 {
            return Err(Error::parameter("noise std must be positive"));
        }
        let s = &self.shells;
        if !(0.0 < s.class4_outer_range.0
            && s.class4_outer_range.0 <= s.class4_outer_range.1
            && s.class4_outer_range.1 < s.class1_outer
            && s.class1_outer < s.class3_outer
            && s.class3_outer < 1.0)
        {
            return Err(Error::parameter("shell fractions must be strictly nested in (0, 1)"));
        }
        Ok(())
    }
}

struct Ellipsoid {
    center: (f64, f64, f64),
    semi: (f64, f64, f64),
}

impl Ellipsoid {
    fn brain_of(dims: Dims) -> Self {
        Ellipsoid {
            center: (
                (dims.nx as f64 - 1.0) / 2.0,
                (dims.ny as f64 - 1.0) / 2.0,
                (dims.nz as f64 - 1.0) / 2.0,
            ),
            semi: (
                dims.nx as f64 * 0.47,
                dims.ny as f64 * 0.47,
                dims.nz as f64 * 0.48,
            ),
        }
    }

    fn contains(&self, x: f64, y: f64, z: f64, shrink: f64) -> bool {
        let dx = (x - self.center.0) / (self.semi.0 - shrink);
        let dy = (y - self.center.1) / (self.semi.1 - shrink);
        let dz = (z - self.center.2) / (self.semi.2 - shrink);
        dx * dx + dy * dy + dz * dz <= 1.0
    }
}

/// A smooth low-frequency field: a few random 3D cosine waves.
struct SmoothField {
    waves: Vec<(f64, f64, f64, f64, f64)>, // kx, ky, kz, phase, amplitude
}

impl SmoothField {
    fn random(dims: Dims, amplitude: f64, rng: &mut SeedRng) -> Self {
        let tau = std::f64::consts::TAU;
        let waves = (0..3)
            .map(|_| {
                let cycles = rng.range(0.5, 1.8);
                let kx = tau * cycles / dims.nx as f64 * rng.range(-1.0, 1.0).signum();
                let ky = tau * rng.range(0.5, 1.8) / dims.ny as f64;
                let kz = tau * rng.range(0.3, 1.2) / dims.nz as f64;
                let phase = rng.range(0.0, tau);
                (kx, ky, kz, phase, amplitude / 3.0 * rng.range(0.6, 1.4))
            })
            .collect();
        SmoothField { waves }
    }

    fn at(&self, x: f64, y: f64, z: f64) -> f64 {
        self.waves
            .iter()
            .map(|(kx, ky, kz, phase, amp)| amp * (kx * x + ky * y + kz * z + phase).cos())
            .sum()
    }
}

struct Lesion {
    center: (f64, f64, f64),
    radius: f64,
    class4_outer: f64,
}

/// Generates one synthetic study (four sequences plus truth labels).
pub fn generate<F: Scalar>(spec: &PhantomSpec) -> Result<Study<F>> {
    spec.validate()?;
    let dims = spec.dims;
    let mut rng = SeedRng::new(spec.seed);
    let brain = Ellipsoid::brain_of(dims);

    // Lesions first: rejection-sample non-overlapping spheres that fit
    // inside the brain and away from the in-plane border.
    let mut lesions: Vec<Lesion> = Vec::new();
    let mut placer = rng.substream(1);
    for _ in 0..spec.n_lesions {
        let mut placed = false;
        for _attempt in 0..10_000 {
            let radius = placer.range(spec.radius_range.0, spec.radius_range.1);
            let margin = spec.border_margin as f64 + radius;
            let hi_x = dims.nx as f64 - 1.0 - margin;
            let hi_z = dims.nz as f64 - 1.0 - (radius + 1.0);
            if hi_x <= margin || hi_z <= radius + 1.0 {
                break;
            }
            let cx = placer.range(margin, hi_x);
            let cy = placer.range(margin, dims.ny as f64 - 1.0 - margin);
            let cz = placer.range(radius + 1.0, hi_z);
            if !brain.contains(cx, cy, cz, radius + 1.0) {
                continue;
            }
            let clear = lesions.iter().all(|l| {
                let d = ((cx - l.center.0).powi(2)
                    + (cy - l.center.1).powi(2)
                    + (cz - l.center.2).powi(2))
                .sqrt();
                d > l.radius + radius + 3.0
            });
            if clear {
                let class4_outer =
                    placer.range(spec.shells.class4_outer_range.0, spec.shells.class4_outer_range.1);
                lesions.push(Lesion { center: (cx, cy, cz), radius, class4_outer });
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::parameter(format!(
                "cannot place a lesion of radius {:?} inside {dims}",
                spec.radius_range
            )));
        }
    }

    // Truth labels from the shell layout.
    let mut labels = LabelVolume::zeros(dims);
    for z in 0..dims.nz {
        for y in 0..dims.ny {
            for x in 0..dims.nx {
                for lesion in &lesions {
                    let d = ((x as f64 - lesion.center.0).powi(2)
                        + (y as f64 - lesion.center.1).powi(2)
                        + (z as f64 - lesion.center.2).powi(2))
                    .sqrt();
                    if d <= lesion.radius {
                        labels.set(
                            x,
                            y,
                            z,
                            spec.shells.class_at(d / lesion.radius, lesion.class4_outer),
                        );
                    }
                }
            }
        }
    }

    // Sequences: per-sequence smooth field and noise stream.
    let mut sequences = Vec::with_capacity(4);
    for seq in Sequence::ALL {
        let mut field_rng = rng.substream(10 + seq.index() as u64);
        let field =
            SmoothField::random(dims, spec.smooth_amplitude * spec.noise_std, &mut field_rng);
        let mut noise_rng = rng.substream(20 + seq.index() as u64);
        let mut voxels = vec![F::zero(); dims.len()];
        for z in 0..dims.nz {
            for y in 0..dims.ny {
                for x in 0..dims.nx {
                    let i = dims.idx(x, y, z);
                    let noise = noise_rng.normal() * spec.noise_std;
                    if !brain.contains(x as f64, y as f64, z as f64, 0.0) {
                        continue; // background stays exactly 0
                    }
                    let mut v = spec.base_intensity
                        + field.at(x as f64, y as f64, z as f64)
                        + noise;
                    let class = labels.get(x, y, z);
                    if class != 0 {
                        v += spec.offsets[class as usize - 1][seq.index()] * spec.noise_std;
                    }
                    voxels[i] = F::from_f64(v.max(1.0));
                }
            }
        }
        sequences.push((seq, Volume::new(dims, voxels)?));
    }

    Study::new(sequences, Some(labels))
}

/// A cohort of independent phantoms: study `i` uses the seed substream
/// `spec.seed -> i`.
pub fn generate_cohort<F: Scalar>(spec: &PhantomSpec, count: usize) -> Result<Vec<Study<F>>> {
    let root = SeedRng::new(spec.seed);
    (0..count)
        .map(|i| {
            let spec = PhantomSpec { seed: root.substream(i as u64).seed(), ..spec.clone() };
            generate(&spec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(seed: u64) -> PhantomSpec {
        PhantomSpec {
            radius_range: (5.0, 7.0),
            border_margin: 8,
            ..PhantomSpec::default_family(Dims::new(48, 48, 20), seed)
        }
    }

    #[test]
    fn no_lesions_means_zero_truth() {
        let spec = PhantomSpec { n_lesions: 0, ..small_spec(1) };
        let study = generate::<f32>(&spec).unwrap();
        assert!(study.labels.as_ref().unwrap().voxels.iter().all(|&c| c == 0));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let spec = small_spec(42);
        let a = generate::<f32>(&spec).unwrap();
        let b = generate::<f32>(&spec).unwrap();
        for seq in Sequence::ALL {
            assert_eq!(
                a.sequence(seq).unwrap().voxels,
                b.sequence(seq).unwrap().voxels
            );
        }
        assert_eq!(a.labels.as_ref().unwrap().voxels, b.labels.as_ref().unwrap().voxels);
    }

    #[test]
    fn default_class_balance_is_severely_imbalanced() {
        let spec = PhantomSpec::default_family(Dims::new(64, 64, 24), 7);
        let study = generate::<f32>(&spec).unwrap();
        let hist = study.labels.as_ref().unwrap().class_histogram();
        let total: usize = hist.iter().sum();
        let class0 = hist[0] as f64 / total as f64;
        assert!(class0 > 0.95, "class 0 fraction {class0}");
        // Every lesion class actually occurs.
        for c in 1..5 {
            assert!(hist[c] > 0, "class {c} missing");
        }
    }

    #[test]
    fn shells_are_nested_and_inside_brain() {
        let spec = small_spec(3);
        let study = generate::<f32>(&spec).unwrap();
        let labels = study.labels.as_ref().unwrap();
        let dims = study.dims();
        let flair = study.sequence(Sequence::Flair).unwrap();
        // Core classes 4 and 1 must be surrounded by lesion, not background:
        // check the 6-neighborhood of every class-4 voxel is lesion.
        for z in 1..dims.nz - 1 {
            for y in 1..dims.ny - 1 {
                for x in 1..dims.nx - 1 {
                    if labels.get(x, y, z) == 4 {
                        for (dx, dy, dz) in
                            [(1i32, 0i32, 0i32), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
                        {
                            let c = labels.get(
                                (x as i32 + dx) as usize,
                                (y as i32 + dy) as usize,
                                (z as i32 + dz) as usize,
                            );
                            assert_ne!(c, 0, "class-4 voxel touching background");
                        }
                    }
                    // Lesion voxels sit inside the brain (nonzero intensity).
                    if labels.get(x, y, z) != 0 {
                        assert!(flair.get(x, y, z) > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn lesion_contrast_meets_detectability_floor() {
        // Per construction, each lesion class differs from background by at
        // least 3 noise-std in some sequence.
        for spec in [
            PhantomSpec::default_family(Dims::new(48, 48, 20), 1),
            PhantomSpec::shifted_family(Dims::new(48, 48, 20), 1),
        ] {
            for class_offsets in spec.offsets {
                let max = class_offsets.iter().fold(0.0f64, |m, o| m.max(o.abs()));
                assert!(max >= 3.0, "offsets {class_offsets:?}");
            }
        }
    }

    #[test]
    fn enhancing_core_differs_from_necrosis_only_in_t1c() {
        let spec = PhantomSpec::default_family(Dims::new(48, 48, 20), 1);
        let necrotic = spec.offsets[0];
        let enhancing = spec.offsets[3];
        assert_eq!(necrotic[..3], enhancing[..3]);
        assert!(enhancing[3] - necrotic[3] >= 3.0);
    }

    #[test]
    fn oversized_lesion_is_a_parameter_error() {
        let spec = PhantomSpec {
            radius_range: (30.0, 40.0),
            ..PhantomSpec::default_family(Dims::new(48, 48, 20), 1)
        };
        assert!(generate::<f32>(&spec).is_err());
    }

    #[test]
    fn cohort_studies_differ() {
        let spec = small_spec(5);
        let cohort = generate_cohort::<f32>(&spec, 3).unwrap();
        assert_eq!(cohort.len(), 3);
        let a = &cohort[0].sequence(Sequence::Flair).unwrap().voxels;
        let b = &cohort[1].sequence(Sequence::Flair).unwrap().voxels;
        assert_ne!(a, b);
    }
}
