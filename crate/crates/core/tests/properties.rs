//! Property tests over the public surface: corruption counts, rotation
//! symmetries, vectorization round-trips, dice symmetry, monotone histogram
//! matching, and format round-trips.

use proptest::prelude::*;

use lesionforge_core::nn::mask_corrupt;
use lesionforge_core::patches::{rotate_patch, PatchBatch, RotationAngle};
use lesionforge_core::pipeline::{dice, Region};
use lesionforge_core::preprocess::{histogram_match, zscore, IncludeMode};
use lesionforge_core::volume::{Dims, LabelVolume, Sequence, Study, Volume};
use lesionforge_core::SeedRng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mask_corrupt_zeroes_exactly_the_rounded_count(
        len in 1usize..500,
        fraction in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let v: Vec<f64> = (0..len).map(|i| i as f64 + 1.0).collect();
        let out = mask_corrupt(&v, fraction, &mut SeedRng::new(seed)).unwrap();
        let expected = (fraction * len as f64).round() as usize;
        let zeroed = out.iter().filter(|&&x| x == 0.0).count();
        prop_assert_eq!(zeroed, expected);
        for (a, b) in v.iter().zip(&out) {
            prop_assert!(*b == 0.0 || a == b);
        }
    }

    #[test]
    fn quarter_turn_four_times_is_identity(
        p in prop::sample::select(vec![1usize, 3, 5, 9, 21]),
        seed in any::<u64>(),
    ) {
        let mut rng = SeedRng::new(seed);
        let patch: Vec<f32> = (0..2 * p * p).map(|_| rng.range(-2.0, 2.0) as f32).collect();
        let mut v = patch.clone();
        for _ in 0..4 {
            v = rotate_patch(&v, p, 2, RotationAngle::Plus90).unwrap();
        }
        prop_assert_eq!(v, patch);
    }

    #[test]
    fn right_angle_rotations_preserve_values(
        p in prop::sample::select(vec![3usize, 7, 11]),
        seed in any::<u64>(),
    ) {
        let mut rng = SeedRng::new(seed);
        let patch: Vec<f32> = (0..p * p * 4).map(|_| rng.range(-1.0, 1.0) as f32).collect();
        for angle in [RotationAngle::Plus90, RotationAngle::Minus90, RotationAngle::Half] {
            let mut rotated = rotate_patch(&patch, p, 4, angle).unwrap();
            let mut original = patch.clone();
            rotated.sort_by(|a, b| a.partial_cmp(b).unwrap());
            original.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assert_eq!(&rotated, &original);
        }
    }

    #[test]
    fn dice_symmetry_and_unity(
        seed in any::<u64>(),
        flips in 1usize..60,
    ) {
        let dims = Dims::new(10, 10, 2);
        let mut rng = SeedRng::new(seed);
        let mut a = LabelVolume::zeros(dims);
        let mut b = LabelVolume::zeros(dims);
        for _ in 0..flips {
            let i = rng.index(dims.len());
            a.voxels[i] = (1 + rng.index(4)) as u8;
            let j = rng.index(dims.len());
            b.voxels[j] = (1 + rng.index(4)) as u8;
        }
        for region in Region::ALL {
            prop_assert_eq!(
                dice(&a, &b, region).unwrap(),
                dice(&b, &a, region).unwrap()
            );
        }
        // Dice is 1 iff the region sets are equal and nonempty.
        let self_dice = dice(&a, &a, Region::WholeTumor).unwrap();
        prop_assert_eq!(self_dice, Some(1.0));
    }

    #[test]
    fn histogram_match_is_monotone_on_random_volumes(
        seed in any::<u64>(),
        n in 64usize..512,
    ) {
        let mut rng = SeedRng::new(seed);
        let src = Volume::new(
            Dims::new(n, 1, 1),
            (0..n).map(|_| rng.range(0.1, 5.0)).collect::<Vec<f64>>(),
        ).unwrap();
        let reference = Volume::new(
            Dims::new(n, 1, 1),
            (0..n).map(|_| rng.range(1.0, 2.0).exp()).collect::<Vec<f64>>(),
        ).unwrap();
        let out = histogram_match(&src, &reference).unwrap();
        let mut pairs: Vec<(f64, f64)> = src
            .voxels
            .iter()
            .copied()
            .zip(out.voxels.iter().copied())
            .collect();
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for w in pairs.windows(2) {
            prop_assert!(w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn zscore_normalizes_included_moments(
        seed in any::<u64>(),
        n in 32usize..400,
    ) {
        let mut rng = SeedRng::new(seed);
        let v = Volume::new(
            Dims::new(n, 1, 1),
            (0..n).map(|_| rng.range(1.0, 50.0)).collect::<Vec<f64>>(),
        ).unwrap();
        prop_assume!(v.voxels.iter().any(|&a| a != v.voxels[0]));
        let out = zscore(&v, IncludeMode::All).unwrap();
        let mean: f64 = out.voxels.iter().sum::<f64>() / n as f64;
        let var: f64 = out.voxels.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        prop_assert!(mean.abs() < 1e-5);
        prop_assert!((var.sqrt() - 1.0).abs() < 1e-5);
    }
}

/// Round-trip of patch vectorization: extracting a window and reading it
/// back per sequence reproduces the voxels exactly.
#[test]
fn vectorization_roundtrip_exact() {
    let dims = Dims::new(15, 13, 3);
    let mut rng = SeedRng::new(99);
    let mk = |rng: &mut SeedRng| {
        Volume::new(dims, (0..dims.len()).map(|_| rng.range(-3.0, 3.0) as f32).collect()).unwrap()
    };
    let study = Study::new(
        vec![
            (Sequence::Flair, mk(&mut rng)),
            (Sequence::T2, mk(&mut rng)),
            (Sequence::T1, mk(&mut rng)),
            (Sequence::T1c, mk(&mut rng)),
        ],
        None,
    )
    .unwrap();
    let p = 5;
    let batch = lesionforge_core::patches::extract_systematic(&study, p, 2).unwrap();
    let centers = batch.centers.as_ref().unwrap();
    for (i, &(cx, cy, cz)) in centers.iter().enumerate() {
        let row = batch.row(i);
        for (s, seq) in Sequence::ALL.iter().enumerate() {
            let vol = study.sequence(*seq).unwrap();
            for r in 0..p {
                for c in 0..p {
                    let expected = vol.get(cx - 2 + c, cy - 2 + r, cz);
                    assert_eq!(row[s * p * p + r * p + c], expected);
                }
            }
        }
    }
}

/// Every extracted center satisfies the full-window constraint.
#[test]
fn centers_never_read_outside_volume() {
    let dims = Dims::new(29, 23, 2);
    let mut labels = LabelVolume::zeros(dims);
    labels.set(14, 11, 1, 2);
    labels.set(3, 3, 0, 4); // close to the border
    let mut rng = SeedRng::new(5);
    let mk = |rng: &mut SeedRng| {
        Volume::new(dims, (0..dims.len()).map(|_| rng.range(0.1, 2.0) as f32).collect()).unwrap()
    };
    let study = Study::new(
        vec![
            (Sequence::Flair, mk(&mut rng)),
            (Sequence::T2, mk(&mut rng)),
            (Sequence::T1, mk(&mut rng)),
            (Sequence::T1c, mk(&mut rng)),
        ],
        Some(labels),
    )
    .unwrap();
    let p = 9;
    let h = p / 2;
    for batch in [
        lesionforge_core::patches::extract_systematic(&study, p, 3).unwrap(),
        lesionforge_core::patches::extract_vicinity(&study, 10, p, 1).unwrap(),
        lesionforge_core::patches::extract_nonlesion(&study, p, 2).unwrap(),
    ] {
        for &(cx, cy, _) in batch.centers.as_ref().unwrap() {
            assert!(cx >= h && cx <= dims.nx - 1 - h);
            assert!(cy >= h && cy <= dims.ny - 1 - h);
        }
    }
}

/// Vicinity labels equal the ground-truth class of the center voxel.
#[test]
fn vicinity_labels_match_truth() {
    let dims = Dims::new(25, 25, 2);
    let mut labels = LabelVolume::zeros(dims);
    for y in 10..15 {
        for x in 10..15 {
            labels.set(x, y, 1, ((x + y) % 4 + 1) as u8);
        }
    }
    let truth = labels.clone();
    let mut rng = SeedRng::new(6);
    let mk = |rng: &mut SeedRng| {
        Volume::new(dims, (0..dims.len()).map(|_| rng.range(0.1, 2.0) as f32).collect()).unwrap()
    };
    let study = Study::new(
        vec![
            (Sequence::Flair, mk(&mut rng)),
            (Sequence::T2, mk(&mut rng)),
            (Sequence::T1, mk(&mut rng)),
            (Sequence::T1c, mk(&mut rng)),
        ],
        Some(labels),
    )
    .unwrap();
    let batch = lesionforge_core::patches::extract_vicinity(&study, 5, 5, 1).unwrap();
    assert!(!batch.is_empty());
    let centers = batch.centers.as_ref().unwrap();
    let batch_labels = batch.labels.as_ref().unwrap();
    for (i, &(x, y, z)) in centers.iter().enumerate() {
        assert_eq!(batch_labels[i], truth.get(x, y, z));
    }
}

/// MPB1 and MVL1 round-trips are bit-exact for random contents.
#[test]
fn format_roundtrips_bit_exact() {
    use lesionforge_core::io::{mvol_read, mvol_write, read_patches, write_patches};
    let dir = std::env::temp_dir().join("lesionforge-prop-tests");
    std::fs::create_dir_all(&dir).unwrap();

    let mut rng = SeedRng::new(2718);
    for case in 0..8 {
        let dims = Dims::new(1 + rng.index(9), 1 + rng.index(9), 1 + rng.index(5));
        let vol = Volume::new(
            dims,
            (0..dims.len()).map(|_| rng.range(-1e3, 1e3) as f32).collect(),
        )
        .unwrap();
        let path = dir.join(format!("v{case}.mvol"));
        mvol_write(&vol, &path).unwrap();
        let back = mvol_read(&path).unwrap().into_intensity().unwrap();
        assert_eq!(vol.dims, back.dims);
        for (a, b) in vol.voxels.iter().zip(&back.voxels) {
            assert_eq!(a.to_bits(), b.to_bits());
        }

        let p = [1usize, 3, 5][rng.index(3)];
        let n_seq = [2usize, 4][rng.index(2)];
        let n = 1 + rng.index(20);
        let data: Vec<f32> =
            (0..n * p * p * n_seq).map(|_| rng.range(-10.0, 10.0) as f32).collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.index(5) as u8).collect();
        let batch = PatchBatch::new(data, Some(labels), None, p, n_seq).unwrap();
        let path = dir.join(format!("b{case}.mpb"));
        write_patches(&batch, &path).unwrap();
        assert_eq!(read_patches(&path).unwrap(), batch);
    }
}
