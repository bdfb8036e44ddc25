//! RMSProp and SGD-with-momentum updates with epoch-annealed learning rates.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::network::{Gradients, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    RmsProp,
    SgdMomentum,
}

/// How the learning rate anneals with the (1-based) epoch number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrSchedule {
    /// `lr = initial / (1 + epoch * decay)`; the default. Decay 0 keeps the
    /// rate constant.
    InverseTime,
    /// `lr = initial / (epoch * decay)`, the annealing formula taken
    /// verbatim; note it *raises* the rate whenever `epoch * decay < 1`.
    Literal,
}

impl LrSchedule {
    pub fn lr(self, initial: f64, decay: f64, epoch: usize) -> f64 {
        debug_assert!(epoch >= 1);
        match self {
            LrSchedule::InverseTime => initial / (1.0 + epoch as f64 * decay),
            LrSchedule::Literal => initial / (epoch as f64 * decay),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "inverse_time" => Ok(LrSchedule::InverseTime),
            "literal" => Ok(LrSchedule::Literal),
            _ => Err(Error::parameter(format!("unknown lr schedule `{s}`"))),
        }
    }
}

/// Optimizer hyper-parameters plus per-parameter accumulator state
/// (velocity for momentum, running squared gradient for RMSProp), kept in
/// `f64` and shaped exactly like the network parameters.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub initial_lr: f64,
    pub lr_decay: f64,
    pub schedule: LrSchedule,
    pub momentum: f64,
    pub rmsprop_decay: f64,
    pub epsilon: f64,
    w_acc: Vec<Vec<f64>>,
    b_acc: Vec<Vec<f64>>,
}

impl OptimizerState {
    #[allow(clippy::too_many_arguments)]
    pub fn new<F: Scalar>(
        kind: OptimizerKind,
        net: &Network<F>,
        initial_lr: f64,
        lr_decay: f64,
        schedule: LrSchedule,
        momentum: f64,
        rmsprop_decay: f64,
        epsilon: f64,
    ) -> Result<Self> {
        // Zero is allowed: a zero-rate run must leave parameters untouched.
        if initial_lr < 0.0 {
            return Err(Error::parameter("initial learning rate must be nonnegative"));
        }
        if lr_decay < 0.0 {
            return Err(Error::parameter("learning rate decay must be nonnegative"));
        }
        if schedule == LrSchedule::Literal && lr_decay == 0.0 {
            return Err(Error::parameter("literal schedule needs a nonzero decay"));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::parameter("momentum must lie in [0, 1)"));
        }
        if !(0.0 < rmsprop_decay && rmsprop_decay < 1.0) {
            return Err(Error::parameter("rmsprop decay must lie in (0, 1)"));
        }
        if epsilon <= 0.0 {
            return Err(Error::parameter("epsilon must be positive"));
        }
        Ok(OptimizerState {
            kind,
            initial_lr,
            lr_decay,
            schedule,
            momentum,
            rmsprop_decay,
            epsilon,
            w_acc: net.layers().iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            b_acc: net.layers().iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        })
    }

    pub fn current_lr(&self, epoch: usize) -> f64 {
        self.schedule.lr(self.initial_lr, self.lr_decay, epoch)
    }

    /// Applies one update. `epoch` is 1-based and selects the annealed rate.
    pub fn step<F: Scalar>(
        &mut self,
        net: &mut Network<F>,
        grads: &Gradients,
        epoch: usize,
    ) -> Result<()> {
        if epoch == 0 {
            return Err(Error::parameter("epoch numbering starts at 1"));
        }
        if grads.dw.len() != self.w_acc.len() {
            return Err(Error::shape("gradient layer count mismatch"));
        }
        let lr = self.current_lr(epoch);
        for (l, layer) in net.layers_mut().iter_mut().enumerate() {
            if grads.dw[l].len() != layer.weights.len()
                || grads.db[l].len() != layer.biases.len()
            {
                return Err(Error::shape(format!("gradient shape mismatch at layer {l}")));
            }
            match self.kind {
                OptimizerKind::SgdMomentum => {
                    update_sgd(&mut self.w_acc[l], &mut layer.weights, &grads.dw[l], self.momentum, lr);
                    update_sgd(&mut self.b_acc[l], &mut layer.biases, &grads.db[l], self.momentum, lr);
                }
                OptimizerKind::RmsProp => {
                    update_rmsprop(
                        &mut self.w_acc[l],
                        &mut layer.weights,
                        &grads.dw[l],
                        self.rmsprop_decay,
                        self.epsilon,
                        lr,
                    );
                    update_rmsprop(
                        &mut self.b_acc[l],
                        &mut layer.biases,
                        &grads.db[l],
                        self.rmsprop_decay,
                        self.epsilon,
                        lr,
                    );
                }
            }
        }
        Ok(())
    }
}

fn update_sgd<F: Scalar>(vel: &mut [f64], params: &mut [F], grads: &[f64], momentum: f64, lr: f64) {
    for ((v, p), g) in vel.iter_mut().zip(params).zip(grads) {
        *v = momentum * *v - lr * g;
        *p = F::from_f64(p.to_f64_s() + *v);
    }
}

fn update_rmsprop<F: Scalar>(
    acc: &mut [f64],
    params: &mut [F],
    grads: &[f64],
    rho: f64,
    epsilon: f64,
    lr: f64,
) {
    for ((a, p), g) in acc.iter_mut().zip(params).zip(grads) {
        *a = rho * *a + (1.0 - rho) * g * g;
        *p = F::from_f64(p.to_f64_s() - lr * g / (*a + epsilon).sqrt());
    }
}
