//! Denoising-autoencoder training: greedy layer-wise pre-training, encoder
//! stacking, classifier attachment, supervised fine-tuning, transfer
//! fine-tuning, and a random hyper-parameter search harness.
//!
//! Pre-training consumes a [`FeatureView`], which carries patch vectors and
//! nothing else — labels are unreachable from the pre-training path by
//! construction. Fine-tuning takes labeled batches and minimizes the NLL of
//! the class of each patch's center voxel.

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{
    mask_corrupt_in_place, weight_sq_sum, xavier_init, Activation, BatchTarget, DenseLayer,
    DropoutPlan, LayerSpec, LossKind, LrSchedule, Network, OptimizerKind, OptimizerState,
};
use crate::patches::PatchBatch;
use crate::rng::SeedRng;
use crate::scalar::Scalar;

// Substream tags for the independent random streams of one training run.
const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_CORRUPT: u64 = 2;
const STREAM_DROPOUT: u64 = 3;

/// Unlabeled feature matrix: the only view of the data that pre-training
/// can see.
#[derive(Debug, Clone)]
pub struct FeatureView<'a, F: Scalar> {
    data: &'a [F],
    n: usize,
    dim: usize,
}

impl<'a, F: Scalar> FeatureView<'a, F> {
    pub fn new(data: &'a [F], dim: usize) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::shape(format!(
                "{} values is not a row multiple of dim {dim}",
                data.len()
            )));
        }
        Ok(FeatureView { data, n: data.len() / dim, dim })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

impl<'a, F: Scalar> From<&'a PatchBatch<F>> for FeatureView<'a, F> {
    fn from(batch: &'a PatchBatch<F>) -> Self {
        FeatureView { data: batch.data(), n: batch.len(), dim: batch.vec_len() }
    }
}

/// Everything one training run needs to know.
#[derive(Debug, Clone)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub initial_lr: f64,
    pub lr_decay: f64,
    pub lr_schedule: LrSchedule,
    pub masking_fraction: f64,
    pub dropout: f64,
    pub dropout_input: bool,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub momentum: f64,
    pub rmsprop_decay: f64,
    pub epsilon: f64,
    pub l2: f64,
    pub seed: u64,
    pub early_stop_patience: Option<usize>,
}

impl TrainingConfig {
    /// Layer-wise pre-training: RMSProp, 25 % masking noise, 50 epochs.
    pub fn pretrain_defaults() -> Self {
        TrainingConfig {
            epochs: 50,
            initial_lr: 0.001,
            lr_decay: 0.0,
            lr_schedule: LrSchedule::InverseTime,
            masking_fraction: 0.25,
            dropout: 0.0,
            dropout_input: false,
            batch_size: 128,
            optimizer: OptimizerKind::RmsProp,
            momentum: 0.0,
            rmsprop_decay: 0.9,
            epsilon: 1e-8,
            l2: 1e-4,
            seed: 0,
            early_stop_patience: None,
        }
    }

    /// Novelty-detector training: 20 % masking noise for 200 epochs.
    pub fn nd_defaults() -> Self {
        TrainingConfig { epochs: 200, masking_fraction: 0.20, ..Self::pretrain_defaults() }
    }

    /// Supervised fine-tuning: SGD with momentum 0.9, initial rate 0.005
    /// annealed with decay 0.001, 25 % dropout on input and hidden layers.
    pub fn finetune_defaults() -> Self {
        TrainingConfig {
            epochs: 30,
            initial_lr: 0.005,
            lr_decay: 0.001,
            lr_schedule: LrSchedule::InverseTime,
            masking_fraction: 0.0,
            dropout: 0.25,
            dropout_input: true,
            batch_size: 128,
            optimizer: OptimizerKind::SgdMomentum,
            momentum: 0.9,
            rmsprop_decay: 0.9,
            epsilon: 1e-8,
            l2: 1e-4,
            seed: 0,
            early_stop_patience: Some(10),
        }
    }

    /// Transfer fine-tuning raises dropout to 35 %.
    pub fn transfer_defaults() -> Self {
        TrainingConfig { dropout: 0.35, ..Self::finetune_defaults() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_lr < 0.0 {
            return Err(Error::parameter("initial_lr must be nonnegative"));
        }
        if self.lr_decay < 0.0 {
            return Err(Error::parameter("lr_decay must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.masking_fraction) {
            return Err(Error::parameter("masking_fraction must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::parameter("dropout must lie in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::parameter("batch_size must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::parameter("momentum must lie in [0, 1)"));
        }
        Ok(())
    }

    fn optimizer_state<F: Scalar>(&self, net: &Network<F>) -> Result<OptimizerState> {
        OptimizerState::new(
            self.optimizer,
            net,
            self.initial_lr,
            self.lr_decay,
            self.lr_schedule,
            self.momentum,
            self.rmsprop_decay,
            self.epsilon,
        )
    }

    fn dropout_plan(&self) -> Result<DropoutPlan> {
        DropoutPlan::new(self.dropout, self.dropout_input)
    }
}

/// Per-epoch record; `val_accuracy` is `None` for reconstruction training.
#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: Option<f64>,
    pub lr: f64,
}

/// What a trained network is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkRole {
    NoveltyDetector,
    SdaeClassifier,
}

/// Where a network's parameters came from.
#[derive(Debug, Clone, Default)]
pub struct Provenance {
    pub config_summary: String,
    pub data_digest: String,
}

/// A role-tagged network plus its training provenance.
#[derive(Debug, Clone)]
pub struct TrainedNetwork<F: Scalar> {
    pub network: Network<F>,
    pub role: NetworkRole,
    pub provenance: Provenance,
}

impl<F: Scalar> TrainedNetwork<F> {
    pub fn new(network: Network<F>, role: NetworkRole, provenance: Provenance) -> Result<Self> {
        match role {
            NetworkRole::NoveltyDetector => {
                let ok = network.layers().len() == 2
                    && network.layers()[0].spec.activation == Activation::Sigmoid
                    && network.layers()[1].spec.activation == Activation::Linear
                    && network.output_dim() == network.input_dim();
                if !ok {
                    return Err(Error::parameter(
                        "novelty detector must be sigmoid-encoder/linear-decoder of input width",
                    ));
                }
            }
            NetworkRole::SdaeClassifier => {
                if network.layers().last().unwrap().spec.activation != Activation::Softmax {
                    return Err(Error::parameter("classifier must end in a softmax layer"));
                }
            }
        }
        Ok(TrainedNetwork { network, role, provenance })
    }

    pub fn n_classes(&self) -> usize {
        self.network.output_dim()
    }
}

/// Encoder/decoder pair from one layer of denoising pre-training.
#[derive(Debug, Clone)]
pub struct Dae<F: Scalar> {
    pub encoder: DenseLayer<F>,
    pub decoder: DenseLayer<F>,
}

impl<F: Scalar> Dae<F> {
    pub fn into_network(
        self,
        role: NetworkRole,
        provenance: Provenance,
    ) -> Result<TrainedNetwork<F>> {
        TrainedNetwork::new(Network::new(vec![self.encoder, self.decoder])?, role, provenance)
    }
}

/// SHA-256 digest of a batch's raw values and labels; goes into provenance.
pub fn data_digest<F: Scalar>(batch: &PatchBatch<F>) -> String {
    let mut hasher = Sha256::new();
    for v in batch.data() {
        hasher.update((v.to_f64_s() as f32).to_le_bytes());
    }
    if let Some(labels) = &batch.labels {
        hasher.update(labels);
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn gather_rows<F: Scalar>(view: &FeatureView<'_, F>, idx: &[usize], out: &mut Vec<F>) {
    out.clear();
    for &i in idx {
        out.extend_from_slice(view.row(i));
    }
}

/// Mean reconstruction loss (plus L2 penalty) of uncorrupted inputs,
/// evaluated in inference mode. Used for validation.
fn reconstruction_loss<F: Scalar>(
    net: &Network<F>,
    view: &FeatureView<'_, F>,
    l2: f64,
) -> Result<f64> {
    let chunk = 1024usize;
    let mut total = 0.0f64;
    let mut buf = Vec::new();
    let mut start = 0usize;
    while start < view.len() {
        let end = (start + chunk).min(view.len());
        let idx: Vec<usize> = (start..end).collect();
        gather_rows(view, &idx, &mut buf);
        let n = end - start;
        let out = net.infer_batch(&buf, n)?;
        for (r, t) in out.iter().zip(&buf) {
            let d = r.to_f64_s() - t.to_f64_s();
            total += d * d;
        }
        start = end;
    }
    let mats: Vec<&[F]> = net.layers().iter().map(|l| l.weights.as_slice()).collect();
    Ok(total / (view.len() * view.dim()) as f64 + l2 * weight_sq_sum(&mats))
}

/// Trains one sigmoid-encoder / linear-decoder DAE to reconstruct the
/// uncorrupted input from a masked copy, under MSE + L2 and the configured
/// optimizer. Returns the encoder/decoder pair and the per-epoch history;
/// validation reconstructs `val` without corruption.
pub fn pretrain_layer<F: Scalar>(
    input_dim: usize,
    hidden_dim: usize,
    train: FeatureView<'_, F>,
    val: FeatureView<'_, F>,
    cfg: &TrainingConfig,
) -> Result<(Dae<F>, Vec<EpochStats>)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::parameter("pre-training needs a nonempty batch"));
    }
    if train.dim() != input_dim || val.dim() != input_dim {
        return Err(Error::shape(format!(
            "patches of dim {} pre-train an input of dim {input_dim}",
            train.dim()
        )));
    }

    let root = SeedRng::new(cfg.seed);
    let mut init = root.substream(STREAM_INIT);
    let encoder =
        xavier_init::<F>(LayerSpec::new(input_dim, hidden_dim, Activation::Sigmoid)?, &mut init);
    let decoder =
        xavier_init::<F>(LayerSpec::new(hidden_dim, input_dim, Activation::Linear)?, &mut init);
    let mut net = Network::new(vec![encoder, decoder])?;
    let mut opt = cfg.optimizer_state(&net)?;
    let plan = cfg.dropout_plan()?;
    let mut corrupt_rng = root.substream(STREAM_CORRUPT);
    let mut dropout_rng = root.substream(STREAM_DROPOUT);

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut clean = Vec::new();
    let mut corrupted = Vec::new();
    for epoch in 1..=cfg.epochs {
        let order =
            root.substream(STREAM_SHUFFLE).substream(epoch as u64).permutation(train.len());
        let mut epoch_loss = 0.0f64;
        let mut batches = 0usize;
        for idx in order.chunks(cfg.batch_size) {
            gather_rows(&train, idx, &mut clean);
            corrupted.clear();
            corrupted.extend_from_slice(&clean);
            for row in corrupted.chunks_mut(input_dim) {
                mask_corrupt_in_place(row, cfg.masking_fraction, &mut corrupt_rng);
            }
            let trace = net.forward_batch(
                &corrupted,
                idx.len(),
                (plan.rate > 0.0).then_some((&plan, &mut dropout_rng)),
            )?;
            epoch_loss += net.batch_loss(
                &trace,
                BatchTarget::Reconstruction(&clean),
                LossKind::MseL2,
                cfg.l2,
            )?;
            let grads = net.backprop(
                &trace,
                BatchTarget::Reconstruction(&clean),
                LossKind::MseL2,
                cfg.l2,
            )?;
            opt.step(&mut net, &grads, epoch)?;
            batches += 1;
        }
        let val_loss = reconstruction_loss(&net, &val, cfg.l2)?;
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss / batches as f64,
            val_loss,
            val_accuracy: None,
            lr: opt.current_lr(epoch),
        });
    }

    let mut layers = net.into_layers().into_iter();
    let dae = Dae { encoder: layers.next().unwrap(), decoder: layers.next().unwrap() };
    Ok((dae, history))
}

/// Applies one encoder layer to a whole feature matrix.
fn encode_matrix<F: Scalar>(encoder: &DenseLayer<F>, view: &FeatureView<'_, F>) -> Result<Vec<F>> {
    let net = Network::new(vec![encoder.clone()])?;
    let chunk = 2048usize;
    let mut out = Vec::with_capacity(view.len() * encoder.spec.output_dim);
    let mut buf = Vec::new();
    let mut start = 0usize;
    while start < view.len() {
        let end = (start + chunk).min(view.len());
        let idx: Vec<usize> = (start..end).collect();
        gather_rows(view, &idx, &mut buf);
        out.extend(net.infer_batch(&buf, end - start)?);
        start = end;
    }
    Ok(out)
}

/// Greedy layer-wise pre-training of an encoder stack.
///
/// Layer `k` is trained as a DAE on the uncorrupted activations of the
/// already-trained layers 1..k applied to the patch set; only that layer's
/// input is corrupted. Per-layer random streams derive from `cfg.seed` and
/// the layer index.
pub fn stack_and_pretrain<F: Scalar>(
    layer_widths: &[usize],
    train: FeatureView<'_, F>,
    val: FeatureView<'_, F>,
    cfg: &TrainingConfig,
) -> Result<(Vec<DenseLayer<F>>, Vec<Vec<EpochStats>>)> {
    if layer_widths.len() < 2 {
        return Err(Error::parameter("stack needs at least input and one hidden width"));
    }
    if layer_widths[0] != train.dim() {
        return Err(Error::shape(format!(
            "first width {} must equal patch vec_len {}",
            layer_widths[0],
            train.dim()
        )));
    }

    let root = SeedRng::new(cfg.seed);
    let mut encoders: Vec<DenseLayer<F>> = Vec::new();
    let mut histories = Vec::new();
    let mut train_data: Option<Vec<F>> = None;
    let mut val_data: Option<Vec<F>> = None;

    for (k, w) in layer_widths.windows(2).enumerate() {
        let (t_view, v_view) = match (&train_data, &val_data) {
            (Some(t), Some(v)) => (FeatureView::new(t, w[0])?, FeatureView::new(v, w[0])?),
            _ => (train.clone(), val.clone()),
        };
        let layer_cfg =
            TrainingConfig { seed: root.substream(100 + k as u64).seed(), ..cfg.clone() };
        let (dae, history) =
            pretrain_layer(w[0], w[1], t_view.clone(), v_view.clone(), &layer_cfg)?;
        train_data = Some(encode_matrix(&dae.encoder, &t_view)?);
        val_data = Some(encode_matrix(&dae.encoder, &v_view)?);
        encoders.push(dae.encoder);
        histories.push(history);
    }
    Ok((encoders, histories))
}

/// Appends a zero-initialized softmax decision layer to a pre-trained
/// encoder stack. A freshly attached classifier outputs exactly uniform
/// probabilities for every input.
pub fn attach_classifier<F: Scalar>(
    stack: Vec<DenseLayer<F>>,
    n_classes: usize,
    provenance: Provenance,
) -> Result<TrainedNetwork<F>> {
    let last = stack
        .last()
        .ok_or_else(|| Error::parameter("classifier needs a nonempty encoder stack"))?;
    let spec = LayerSpec::new(last.spec.output_dim, n_classes, Activation::Softmax)?;
    let mut layers = stack;
    layers.push(DenseLayer::zeros(spec));
    TrainedNetwork::new(Network::new(layers)?, NetworkRole::SdaeClassifier, provenance)
}

fn check_labels<F: Scalar>(batch: &PatchBatch<F>, n_classes: usize) -> Result<&[u8]> {
    let labels =
        batch.labels.as_deref().ok_or_else(|| Error::data("fine-tuning needs labeled patches"))?;
    if let Some(&bad) = labels.iter().find(|&&l| l as usize >= n_classes) {
        return Err(Error::data(format!("label {bad} outside 0..{n_classes}")));
    }
    Ok(labels)
}

/// Lowest-index argmax, the tie rule used across the pipeline.
pub fn argmax<F: Scalar>(row: &[F]) -> usize {
    let mut best = 0usize;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Mean NLL and accuracy of a labeled batch, inference mode.
pub fn classifier_metrics<F: Scalar>(
    net: &Network<F>,
    batch: &PatchBatch<F>,
) -> Result<(f64, f64)> {
    let labels = check_labels(batch, net.output_dim())?;
    if batch.is_empty() {
        return Err(Error::parameter("metrics over an empty batch"));
    }
    let out_dim = net.output_dim();
    let chunk = 1024usize;
    let mut nll = 0.0f64;
    let mut hits = 0usize;
    let mut start = 0usize;
    while start < batch.len() {
        let end = (start + chunk).min(batch.len());
        let n = end - start;
        let x = &batch.data()[start * batch.vec_len()..end * batch.vec_len()];
        let probs = net.infer_batch(x, n)?;
        for s in 0..n {
            let row = &probs[s * out_dim..(s + 1) * out_dim];
            let label = labels[start + s] as usize;
            nll += crate::nn::nll_loss(row, label)?;
            if argmax(row) == label {
                hits += 1;
            }
        }
        start = end;
    }
    Ok((nll / batch.len() as f64, hits as f64 / batch.len() as f64))
}

/// End-to-end supervised fine-tuning with dropout and annealed SGD.
///
/// Tracks validation NLL and accuracy per epoch and returns the
/// best-validation-NLL checkpoint (ties break to the earlier epoch), with
/// optional early stopping on `cfg.early_stop_patience`.
pub fn finetune<F: Scalar>(
    net: &TrainedNetwork<F>,
    train: &PatchBatch<F>,
    val: &PatchBatch<F>,
    cfg: &TrainingConfig,
) -> Result<(TrainedNetwork<F>, Vec<EpochStats>)> {
    cfg.validate()?;
    if net.role != NetworkRole::SdaeClassifier {
        return Err(Error::parameter("fine-tuning expects a classifier network"));
    }
    let n_classes = net.n_classes();
    let train_labels = check_labels(train, n_classes)?.to_vec();
    check_labels(val, n_classes)?;
    if train.is_empty() {
        return Err(Error::parameter("fine-tuning needs a nonempty batch"));
    }
    if train.vec_len() != net.network.input_dim() {
        return Err(Error::shape(format!(
            "patches of dim {} cannot feed input of dim {}",
            train.vec_len(),
            net.network.input_dim()
        )));
    }

    let root = SeedRng::new(cfg.seed);
    let mut network = net.network.clone();
    let mut opt = cfg.optimizer_state(&network)?;
    let plan = cfg.dropout_plan()?;
    let mut dropout_rng = root.substream(STREAM_DROPOUT);
    let view = FeatureView::from(train);

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Network<F>)> = None;
    let mut x = Vec::new();
    let mut y: Vec<u8> = Vec::new();

    for epoch in 1..=cfg.epochs {
        let order =
            root.substream(STREAM_SHUFFLE).substream(epoch as u64).permutation(train.len());
        let mut epoch_loss = 0.0f64;
        let mut batches = 0usize;
        for idx in order.chunks(cfg.batch_size) {
            gather_rows(&view, idx, &mut x);
            y.clear();
            y.extend(idx.iter().map(|&i| train_labels[i]));
            let trace = network.forward_batch(
                &x,
                idx.len(),
                (plan.rate > 0.0).then_some((&plan, &mut dropout_rng)),
            )?;
            epoch_loss +=
                network.batch_loss(&trace, BatchTarget::Classes(&y), LossKind::Nll, 0.0)?;
            let grads = network.backprop(&trace, BatchTarget::Classes(&y), LossKind::Nll, 0.0)?;
            opt.step(&mut network, &grads, epoch)?;
            batches += 1;
        }
        let (val_nll, val_acc) = classifier_metrics(&network, val)?;
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss / batches as f64,
            val_loss: val_nll,
            val_accuracy: Some(val_acc),
            lr: opt.current_lr(epoch),
        });
        let improved = best.as_ref().map_or(true, |(b, _, _)| val_nll < *b);
        if improved {
            best = Some((val_nll, epoch, network.clone()));
        }
        if let (Some(patience), Some((_, best_epoch, _))) = (cfg.early_stop_patience, &best) {
            if epoch - best_epoch >= patience {
                break;
            }
        }
    }

    let final_net = best.map(|(_, _, n)| n).unwrap_or(network);
    let trained = TrainedNetwork::new(
        final_net,
        NetworkRole::SdaeClassifier,
        Provenance { config_summary: format!("{cfg:?}"), data_digest: data_digest(train) },
    )?;
    Ok((trained, history))
}

/// Transfer learning: start from a pre-trained classifier, re-zero the
/// decision layer, then fine-tune on the new cohort's patches.
pub fn transfer_finetune<F: Scalar>(
    pretrained: &TrainedNetwork<F>,
    train: &PatchBatch<F>,
    val: &PatchBatch<F>,
    cfg: &TrainingConfig,
) -> Result<(TrainedNetwork<F>, Vec<EpochStats>)> {
    if pretrained.role != NetworkRole::SdaeClassifier {
        return Err(Error::parameter("transfer expects a classifier network"));
    }
    if train.vec_len() != pretrained.network.input_dim() {
        return Err(Error::shape(format!(
            "patches of dim {} cannot feed input of dim {}",
            train.vec_len(),
            pretrained.network.input_dim()
        )));
    }
    let mut layers = pretrained.network.layers().to_vec();
    let last = layers.last_mut().unwrap();
    *last = DenseLayer::zeros(last.spec);
    let start = TrainedNetwork::new(
        Network::new(layers)?,
        NetworkRole::SdaeClassifier,
        pretrained.provenance.clone(),
    )?;
    finetune(&start, train, val, cfg)
}

/// Hyper-parameter ranges for random search. Rates are sampled log-uniform,
/// fractions uniform, and discrete choices uniform over the listed options.
#[derive(Debug, Clone)]
pub struct SearchSpace {
    pub lr: (f64, f64),
    pub l2: (f64, f64),
    pub dropout: (f64, f64),
    pub masking: (f64, f64),
    pub batch_sizes: Vec<usize>,
    pub optimizers: Vec<OptimizerKind>,
}

impl SearchSpace {
    fn validate(&self) -> Result<()> {
        let ordered = |r: (f64, f64)| r.0 <= r.1;
        if self.lr.0 <= 0.0 || self.l2.0 <= 0.0 {
            return Err(Error::parameter("log-sampled ranges need positive lower bounds"));
        }
        if !(ordered(self.lr) && ordered(self.l2) && ordered(self.dropout) && ordered(self.masking))
        {
            return Err(Error::parameter("search ranges must be ordered"));
        }
        if self.batch_sizes.is_empty() || self.optimizers.is_empty() {
            return Err(Error::parameter("search space has no discrete choices"));
        }
        Ok(())
    }

    fn sample(&self, base: &TrainingConfig, rng: &mut SeedRng) -> TrainingConfig {
        TrainingConfig {
            initial_lr: rng.log_range(self.lr.0, self.lr.1),
            l2: rng.log_range(self.l2.0, self.l2.1),
            dropout: rng.range(self.dropout.0, self.dropout.1),
            masking_fraction: rng.range(self.masking.0, self.masking.1),
            batch_size: self.batch_sizes[rng.index(self.batch_sizes.len())],
            optimizer: self.optimizers[rng.index(self.optimizers.len())],
            ..base.clone()
        }
    }
}

/// One evaluated configuration; lower score is better.
#[derive(Debug, Clone)]
pub struct Trial {
    pub index: usize,
    pub config: TrainingConfig,
    pub score: f64,
}

/// Samples `budget` configurations from the space (streams derived from
/// `base.seed` and the trial index), evaluates them in parallel, and
/// returns the trials ranked best-first.
pub fn random_search<E>(
    space: &SearchSpace,
    budget: usize,
    base: &TrainingConfig,
    eval: E,
) -> Result<Vec<Trial>>
where
    E: Fn(&TrainingConfig) -> Result<f64> + Sync,
{
    space.validate()?;
    if budget == 0 {
        return Err(Error::parameter("search budget must be at least 1"));
    }
    let root = SeedRng::new(base.seed);
    let configs: Vec<TrainingConfig> = (0..budget)
        .map(|i| {
            let mut rng = root.substream(1000 + i as u64);
            let mut cfg = space.sample(base, &mut rng);
            cfg.seed = rng.next_u64();
            cfg
        })
        .collect();

    let mut trials: Vec<Trial> = configs
        .into_par_iter()
        .enumerate()
        .map(|(index, config)| {
            let score = eval(&config)?;
            Ok(Trial { index, config, score })
        })
        .collect::<Result<_>>()?;
    trials.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.index.cmp(&b.index))
    });
    Ok(trials)
}
