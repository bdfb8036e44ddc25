//! Network stack: batched forward pass, dropout, and analytic backprop.
//!
//! Activations are computed in the parameter scalar type `F`; deltas, loss,
//! and gradient accumulation run in `f64` (see [`Gradients`]).

use crate::error::{Error, Result};
use crate::rng::SeedRng;
use crate::scalar::Scalar;

use super::layer::{Activation, DenseLayer};
use super::loss::{nll_loss, weight_sq_sum, LossKind, PROB_FLOOR};

/// Inverted-dropout configuration for training-time forward passes.
///
/// Survivors are rescaled by `1/(1-rate)` so inference needs no
/// compensation. The output layer is never dropped; the input vector is
/// dropped only when `apply_to_input` is set.
#[derive(Debug, Clone, Copy)]
pub struct DropoutPlan {
    pub rate: f64,
    pub apply_to_input: bool,
}

impl DropoutPlan {
    pub fn new(rate: f64, apply_to_input: bool) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::parameter(format!("dropout rate {rate} outside [0, 1)")));
        }
        Ok(DropoutPlan { rate, apply_to_input })
    }

    pub fn disabled() -> Self {
        DropoutPlan { rate: 0.0, apply_to_input: false }
    }
}

/// Per-layer activations retained by a training forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace<F: Scalar> {
    n: usize,
    /// `inputs[l]`: the (post-dropout) batch that fed layer `l`.
    inputs: Vec<Vec<F>>,
    /// `acts[l]`: pre-dropout activations produced by layer `l`.
    acts: Vec<Vec<F>>,
    /// Dropout scale factors applied to `acts[l]` to form `inputs[l+1]`
    /// (`0` dropped, `1/(1-rate)` kept); `None` when no dropout applied.
    masks: Vec<Option<Vec<F>>>,
}

impl<F: Scalar> ForwardTrace<F> {
    pub fn batch_len(&self) -> usize {
        self.n
    }

    /// Final-layer activations, `n x output_dim` row-major.
    pub fn output(&self) -> &[F] {
        self.acts.last().expect("network has at least one layer")
    }

    /// Pre-dropout activations of layer `l`.
    pub fn activations(&self, l: usize) -> &[F] {
        &self.acts[l]
    }

    pub fn output_row(&self, sample: usize, out_dim: usize) -> &[F] {
        &self.output()[sample * out_dim..(sample + 1) * out_dim]
    }
}

/// Supervision for one batch: reconstruction targets (`n x output_dim`,
/// row-major) or class labels (`n`).
#[derive(Debug, Clone, Copy)]
pub enum BatchTarget<'a, F: Scalar> {
    Reconstruction(&'a [F]),
    Classes(&'a [u8]),
}

/// Batch-mean parameter gradients, accumulated in `f64`.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub dw: Vec<Vec<f64>>,
    pub db: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like<F: Scalar>(layers: &[DenseLayer<F>]) -> Self {
        Gradients {
            dw: layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            db: layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }
}

/// A validated stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<F: Scalar> {
    layers: Vec<DenseLayer<F>>,
}

impl<F: Scalar> Network<F> {
    /// Chains the layers, checking dimension continuity and that softmax
    /// appears only as the final layer.
    pub fn new(layers: Vec<DenseLayer<F>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::parameter("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].spec.output_dim != pair[1].spec.input_dim {
                return Err(Error::shape(format!(
                    "layer output {} feeds layer input {}",
                    pair[0].spec.output_dim, pair[1].spec.input_dim
                )));
            }
        }
        let last = layers.len() - 1;
        if layers[..last].iter().any(|l| l.spec.activation == Activation::Softmax) {
            return Err(Error::parameter("softmax is only allowed as the final layer"));
        }
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[DenseLayer<F>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer<F>] {
        &mut self.layers
    }

    pub fn into_layers(self) -> Vec<DenseLayer<F>> {
        self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().spec.output_dim
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.parameter_count()).sum()
    }

    fn check_input(&self, x: &[F], n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::parameter("empty batch"));
        }
        if x.len() != n * self.input_dim() {
            return Err(Error::shape(format!(
                "batch of {n} samples with input dim {} needs {} values, got {}",
                self.input_dim(),
                n * self.input_dim(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Training-time forward pass over a batch, recording per-layer
    /// activations. Dropout masks are drawn sample-major then unit-major,
    /// so the draw order is independent of execution strategy.
    pub fn forward_batch(
        &self,
        x: &[F],
        n: usize,
        dropout: Option<(&DropoutPlan, &mut SeedRng)>,
    ) -> Result<ForwardTrace<F>> {
        self.check_input(x, n)?;
        let num_layers = self.layers.len();
        let mut inputs: Vec<Vec<F>> = Vec::with_capacity(num_layers);
        let mut acts: Vec<Vec<F>> = Vec::with_capacity(num_layers);
        let mut masks: Vec<Option<Vec<F>>> = vec![None; num_layers];

        let (plan, mut rng) = match dropout {
            Some((p, r)) if p.rate > 0.0 => (Some(*p), Some(r)),
            _ => (None, None),
        };

        let mut current = x.to_vec();
        if let (Some(p), Some(rng)) = (&plan, rng.as_deref_mut()) {
            if p.apply_to_input {
                apply_dropout(&mut current, p.rate, rng);
            }
        }

        for (l, layer) in self.layers.iter().enumerate() {
            let a = affine_activate(layer, &current, n);
            inputs.push(std::mem::take(&mut current));
            current = a.clone();
            // Hidden activations get dropped; the final layer never does.
            if l + 1 < num_layers {
                if let (Some(p), Some(rng)) = (&plan, rng.as_deref_mut()) {
                    masks[l] = Some(apply_dropout(&mut current, p.rate, rng));
                }
            }
            acts.push(a);
        }
        Ok(ForwardTrace { n, inputs, acts, masks })
    }

    /// Inference over a batch: no dropout, no trace. Returns the final
    /// activations, `n x output_dim` row-major.
    pub fn infer_batch(&self, x: &[F], n: usize) -> Result<Vec<F>> {
        self.check_input(x, n)?;
        let mut current = x.to_vec();
        for layer in &self.layers {
            current = affine_activate(layer, &current, n);
        }
        Ok(current)
    }

    /// Single-sample inference.
    pub fn infer(&self, input: &[F]) -> Result<Vec<F>> {
        self.infer_batch(input, 1)
    }

    /// Mean per-sample loss over the traced batch, plus the L2 penalty for
    /// [`LossKind::MseL2`].
    pub fn batch_loss(
        &self,
        trace: &ForwardTrace<F>,
        target: BatchTarget<'_, F>,
        loss: LossKind,
        l2: f64,
    ) -> Result<f64> {
        let out_dim = self.output_dim();
        let output = trace.output();
        let n = trace.n;
        let mut total = 0.0f64;
        match (loss, target) {
            (LossKind::MseL2, BatchTarget::Reconstruction(t)) => {
                if t.len() != output.len() {
                    return Err(Error::shape("reconstruction target size mismatch"));
                }
                for (r, t) in output.iter().zip(t) {
                    let d = r.to_f64_s() - t.to_f64_s();
                    total += d * d;
                }
                total /= (n * out_dim) as f64;
                let mats: Vec<&[F]> = self.layers.iter().map(|l| l.weights.as_slice()).collect();
                total += l2 * weight_sq_sum(&mats);
            }
            (LossKind::Nll, BatchTarget::Classes(labels)) => {
                if labels.len() != n {
                    return Err(Error::shape("label count mismatch"));
                }
                for (s, &label) in labels.iter().enumerate() {
                    total += nll_loss(trace.output_row(s, out_dim), label as usize)?;
                }
                total /= n as f64;
            }
            _ => return Err(Error::parameter("loss kind does not match target kind")),
        }
        Ok(total)
    }

    /// Exact analytic gradient of the mean batch loss with respect to every
    /// parameter. The L2 penalty contributes `2*l2*w` to the weight
    /// gradients; dropout masks recorded in the trace are replayed.
    pub fn backprop(
        &self,
        trace: &ForwardTrace<F>,
        target: BatchTarget<'_, F>,
        loss: LossKind,
        l2: f64,
    ) -> Result<Gradients> {
        let n = trace.n;
        let mut grads = Gradients::zeros_like(&self.layers);

        // Delta at the output layer, per sample, in f64.
        let mut delta = self.output_delta(trace, target, loss)?;

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let in_dim = layer.spec.input_dim;
            let od = layer.spec.output_dim;
            let input = &trace.inputs[l];
            let dw = &mut grads.dw[l];
            let db = &mut grads.db[l];

            // Parameter gradients: accumulate over samples in batch order.
            for s in 0..n {
                let d_row = &delta[s * od..(s + 1) * od];
                let x_row = &input[s * in_dim..(s + 1) * in_dim];
                for (o, &d) in d_row.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    db[o] += d;
                    let w_row = &mut dw[o * in_dim..(o + 1) * in_dim];
                    for (g, x) in w_row.iter_mut().zip(x_row) {
                        *g += d * x.to_f64_s();
                    }
                }
            }
            let inv_n = 1.0 / n as f64;
            for g in dw.iter_mut() {
                *g *= inv_n;
            }
            for g in db.iter_mut() {
                *g *= inv_n;
            }
            // The penalty term belongs to the reconstruction loss; NLL
            // fine-tuning carries no weight decay.
            if l2 > 0.0 && loss == LossKind::MseL2 {
                for (g, w) in dw.iter_mut().zip(&layer.weights) {
                    *g += 2.0 * l2 * w.to_f64_s();
                }
            }

            if l == 0 {
                break;
            }

            // Propagate to the previous layer: through the weights, the
            // dropout mask, and the previous activation derivative.
            let prev = &self.layers[l - 1];
            let prev_dim = prev.spec.output_dim;
            let mut prev_delta = vec![0.0f64; n * prev_dim];
            for s in 0..n {
                let d_row = &delta[s * od..(s + 1) * od];
                let p_row = &mut prev_delta[s * prev_dim..(s + 1) * prev_dim];
                for (o, &d) in d_row.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let w_row = layer.weight_row(o);
                    for (p, w) in p_row.iter_mut().zip(w_row) {
                        *p += d * w.to_f64_s();
                    }
                }
            }
            if let Some(mask) = &trace.masks[l - 1] {
                for (p, m) in prev_delta.iter_mut().zip(mask) {
                    *p *= m.to_f64_s();
                }
            }
            match prev.spec.activation {
                Activation::Sigmoid => {
                    for (p, a) in prev_delta.iter_mut().zip(&trace.acts[l - 1]) {
                        let a = a.to_f64_s();
                        *p *= a * (1.0 - a);
                    }
                }
                Activation::Linear => {}
                Activation::Softmax => unreachable!("softmax only in final position"),
            }
            delta = prev_delta;
        }
        Ok(grads)
    }

    fn output_delta(
        &self,
        trace: &ForwardTrace<F>,
        target: BatchTarget<'_, F>,
        loss: LossKind,
    ) -> Result<Vec<f64>> {
        let n = trace.n;
        let out_dim = self.output_dim();
        let output = trace.output();
        let final_act = self.layers.last().unwrap().spec.activation;
        let mut delta = vec![0.0f64; n * out_dim];

        match (loss, target) {
            (LossKind::Nll, BatchTarget::Classes(labels)) => {
                if final_act != Activation::Softmax {
                    return Err(Error::parameter("NLL loss requires a softmax output layer"));
                }
                if labels.len() != n {
                    return Err(Error::shape("label count mismatch"));
                }
                for (s, &label) in labels.iter().enumerate() {
                    let label = label as usize;
                    if label >= out_dim {
                        return Err(Error::data(format!(
                            "label {label} out of range for {out_dim} classes"
                        )));
                    }
                    let row = &output[s * out_dim..(s + 1) * out_dim];
                    let d_row = &mut delta[s * out_dim..(s + 1) * out_dim];
                    // Softmax + NLL: dL/dz = p - onehot, but account for the
                    // probability clamp: a fully saturated-away class
                    // contributes through the floor, so keep the exact form.
                    let p_label = row[label].to_f64_s();
                    let scale = if p_label < PROB_FLOOR { 0.0 } else { 1.0 };
                    for (j, p) in row.iter().enumerate() {
                        d_row[j] = scale * (p.to_f64_s() - if j == label { 1.0 } else { 0.0 });
                    }
                }
            }
            (LossKind::MseL2, BatchTarget::Reconstruction(t)) => {
                if t.len() != output.len() {
                    return Err(Error::shape("reconstruction target size mismatch"));
                }
                let scale = 2.0 / out_dim as f64;
                match final_act {
                    Activation::Linear => {
                        for ((d, r), t) in delta.iter_mut().zip(output).zip(t) {
                            *d = scale * (r.to_f64_s() - t.to_f64_s());
                        }
                    }
                    Activation::Sigmoid => {
                        for ((d, r), t) in delta.iter_mut().zip(output).zip(t) {
                            let a = r.to_f64_s();
                            *d = scale * (a - t.to_f64_s()) * a * (1.0 - a);
                        }
                    }
                    Activation::Softmax => {
                        // Full softmax Jacobian: dz_i = p_i*(g_i - sum_j g_j p_j).
                        for s in 0..n {
                            let row = &output[s * out_dim..(s + 1) * out_dim];
                            let t_row = &t[s * out_dim..(s + 1) * out_dim];
                            let g: Vec<f64> = row
                                .iter()
                                .zip(t_row)
                                .map(|(r, t)| scale * (r.to_f64_s() - t.to_f64_s()))
                                .collect();
                            let dot: f64 =
                                g.iter().zip(row).map(|(g, p)| g * p.to_f64_s()).sum();
                            let d_row = &mut delta[s * out_dim..(s + 1) * out_dim];
                            for (j, p) in row.iter().enumerate() {
                                d_row[j] = p.to_f64_s() * (g[j] - dot);
                            }
                        }
                    }
                }
            }
            _ => return Err(Error::parameter("loss kind does not match target kind")),
        }
        Ok(delta)
    }
}

/// `activation(x W^T + b)` over a batch; softmax rows are computed in `f64`.
fn affine_activate<F: Scalar>(layer: &DenseLayer<F>, x: &[F], n: usize) -> Vec<F> {
    let in_dim = layer.spec.input_dim;
    let out_dim = layer.spec.output_dim;
    debug_assert_eq!(x.len(), n * in_dim);
    let mut out = vec![F::zero(); n * out_dim];
    for s in 0..n {
        let x_row = &x[s * in_dim..(s + 1) * in_dim];
        let o_row = &mut out[s * out_dim..(s + 1) * out_dim];
        for (o, slot) in o_row.iter_mut().enumerate() {
            *slot = dot(layer.weight_row(o), x_row) + layer.biases[o];
        }
        match layer.spec.activation {
            Activation::Linear => {}
            Activation::Sigmoid => {
                for v in o_row.iter_mut() {
                    *v = sigmoid(*v);
                }
            }
            Activation::Softmax => softmax_row(o_row),
        }
    }
    out
}

#[inline]
fn sigmoid<F: Scalar>(z: F) -> F {
    F::one() / (F::one() + (-z).exp())
}

/// Stable softmax computed in `f64`, written back into the row.
fn softmax_row<F: Scalar>(row: &mut [F]) {
    let max = row.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.to_f64_s()));
    let exps: Vec<f64> = row.iter().map(|v| (v.to_f64_s() - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    for (slot, e) in row.iter_mut().zip(exps) {
        *slot = F::from_f64(e / sum);
    }
}

/// Dot product over eight parallel accumulator lanes. The lane structure
/// both feeds the SLP vectorizer and fixes the association order, so
/// results are identical across runs.
#[inline]
fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [F::zero(); 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for l in 0..8 {
            acc[l] = acc[l] + xa[l] * xb[l];
        }
    }
    let mut tail = F::zero();
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail = tail + *x * *y;
    }
    let half = [acc[0] + acc[4], acc[1] + acc[5], acc[2] + acc[6], acc[3] + acc[7]];
    ((half[0] + half[1]) + (half[2] + half[3])) + tail
}

/// Inverted dropout in place; returns the applied scale factors.
fn apply_dropout<F: Scalar>(values: &mut [F], rate: f64, rng: &mut SeedRng) -> Vec<F> {
    let keep_scale = F::from_f64(1.0 / (1.0 - rate));
    let mut mask = Vec::with_capacity(values.len());
    for v in values.iter_mut() {
        if rng.bernoulli(rate) {
            *v = F::zero();
            mask.push(F::zero());
        } else {
            *v = *v * keep_scale;
            mask.push(keep_scale);
        }
    }
    mask
}
