use lesionforge_core::autoencoder::*;

use lesionforge_core::patches::*;
use lesionforge_core::novelty::*;
use lesionforge_core::phantom::*;
use lesionforge_core::pipeline::*;
use lesionforge_core::preprocess::*;
use lesionforge_core::volume::*;

fn normalize_study(study: &Study<f32>, reference: &Study<f32>) -> Study<f32> {
    let mut sequences = Vec::new();
    for seq in Sequence::ALL {
        let src = study.sequence(seq).unwrap();
        let matched = histogram_match(src, reference.sequence(seq).unwrap()).unwrap();
        sequences.push((seq, zscore(&matched, IncludeMode::PositiveOnly).unwrap()));
    }
    Study::new(sequences, study.labels.clone()).unwrap()
}

fn concat(batches: Vec<PatchBatch<f32>>) -> PatchBatch<f32> {
    let p = batches[0].patch_size();
    let n_seq = batches[0].n_sequences();
    let labeled = batches[0].labels.is_some();
    let mut data = Vec::new();
    let mut labels = labeled.then(Vec::new);
    for b in batches {
        data.extend_from_slice(b.data());
        if let (Some(acc), Some(l)) = (labels.as_mut(), b.labels.as_ref()) {
            acc.extend_from_slice(l);
        }
    }
    PatchBatch::new(data, labels, None, p, n_seq).unwrap()
}

#[test]
fn diag() {
    let dims = Dims::new(64, 64, 24);
    let spec = PhantomSpec::default_family(dims, 90210);
    let cohort: Vec<Study<f32>> = generate_cohort(&spec, 6).unwrap();
    let reference = cohort[0].clone();
    let normalized: Vec<Study<f32>> = cohort.iter().map(|s| normalize_study(s, &reference)).collect();
    let (train, rest) = normalized.split_at(4);
    let (val, test) = rest.split_at(1);



    let pretrain = concat(train.iter().map(|s| extract_systematic(s, 21, 5).unwrap()).collect());
    let pre_val = concat(val.iter().map(|s| extract_systematic(s, 21, 5).unwrap()).collect());
    println!("pretrain patches: {}", pretrain.len());

    let pre_cfg = TrainingConfig { epochs: 6, batch_size: 128, seed: 2002, ..TrainingConfig::pretrain_defaults() };
    let t0 = std::time::Instant::now();
    let (stack, hists) = stack_and_pretrain(&[1764, 256, 128, 64, 32], (&pretrain).into(), (&pre_val).into(), &pre_cfg).unwrap();
    println!("pretrain took {:.1}s", t0.elapsed().as_secs_f64());
    for (k, h) in hists.iter().enumerate() {
        println!("  layer {k}: val loss {:.5} -> {:.5}", h[0].val_loss, h.last().unwrap().val_loss);
    }
    let head = attach_classifier(stack, 5, Provenance::default()).unwrap();

    for (margin, thin, aug, lr, dropout, epochs) in [
        (4usize, 8000usize, false, 0.1, 0.25, 60usize),
        (6, 5000, true, 0.1, 0.25, 25),
    ] {
        let mut ft_train = concat(train.iter().map(|s| extract_vicinity(s, margin, 21, 1).unwrap()).collect()).thin_to(thin);
        if aug {
            ft_train = augment(&ft_train, AugmentPolicy::LtAllThree, &mut lesionforge_core::SeedRng::new(99)).unwrap();
        }
        let ft_val = concat(val.iter().map(|s| extract_vicinity(s, margin, 21, 2).unwrap()).collect()).thin_to(2000);
        let mut hist = [0usize; 5];
        for &l in ft_train.labels.as_ref().unwrap() {
            hist[l as usize] += 1;
        }
        println!("margin {margin} aug {aug}: label histogram: {hist:?} (n={})", ft_train.len());
        let cfg = TrainingConfig {
            epochs,
            initial_lr: lr,
            dropout,
            dropout_input: dropout > 0.0,
            batch_size: 128,
            seed: 3003,
            early_stop_patience: None,
            ..TrainingConfig::finetune_defaults()
        };
        let t0 = std::time::Instant::now();
        let (tuned, hist) = finetune(&head, &ft_train, &ft_val, &cfg).unwrap();
        let accs: Vec<String> = hist.iter().map(|e| format!("{:.3}", e.val_accuracy.unwrap())).collect();
        println!("lr={lr} dropout={dropout}: val acc per epoch {accs:?} ({:.0}s)", t0.elapsed().as_secs_f64());
        // per-class recall on the val batch
        let mut per_class = [[0usize; 2]; 5];
        let probs = tuned.network.infer_batch(ft_val.data(), ft_val.len()).unwrap();
        for (s, &label) in ft_val.labels.as_ref().unwrap().iter().enumerate() {
            let row = &probs[s * 5..(s + 1) * 5];
            let am = argmax(row);
            per_class[label as usize][1] += 1;
            if am == label as usize { per_class[label as usize][0] += 1; }
        }
        println!("  val per-class recall: {:?}", per_class.iter().map(|c| if c[1]>0 {format!("{:.2}", c[0] as f64 / c[1] as f64)} else {"-".into()}).collect::<Vec<_>>());

        // Novelty detector for the rejection step.
        let nd_train = concat(train.iter().map(|s| extract_nonlesion(s, 21, 4).unwrap()).collect()).thin_to(6000);
        let nd_cfg = TrainingConfig { epochs: 20, batch_size: 128, seed: 1001, ..TrainingConfig::nd_defaults() };
        let (nd_dae, _) = pretrain_layer(882, 64, (&nd_train).into(), (&nd_train).into(), &nd_cfg).unwrap();
        let nd = nd_dae.into_network(NetworkRole::NoveltyDetector, Provenance::default()).unwrap();
        let map = lesionforge_core::novelty::nd_map(&test[0], &nd, 21, 1).unwrap();
        let (_, mask) = lesionforge_core::novelty::otsu_binarize(&map, 256).unwrap();

        let pred = predict_volume(&tuned, &test[0], 21).unwrap();
        let mut ph = [0usize; 5];
        for &c in &pred.labels.voxels {
            ph[c as usize] += 1;
        }
        let truth = test[0].labels.as_ref().unwrap();
        let scores = region_scores(&pred.labels, truth).unwrap();
        println!("  raw histogram {ph:?}; WT {:?} TC {:?} AT {:?}", scores.wt, scores.tc, scores.at);
        let rejected = reject_false_positives(&pred, &mask, Connectivity::TwentySix).unwrap();
        let post = region_scores(&rejected.labels, truth).unwrap();
        println!("  post-rejection: WT {:?} TC {:?} AT {:?}", post.wt, post.tc, post.at);
    }
}
