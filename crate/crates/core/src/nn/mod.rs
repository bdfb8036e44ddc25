//! Dense feed-forward network primitives.
//!
//! Layers, activations, losses, analytic gradients, masking corruption,
//! inverted dropout, and the two optimizers used by the training recipes
//! (RMSProp and SGD with momentum, both with epoch-annealed learning
//! rates). Everything is deterministic under a [`crate::SeedRng`] seed.

mod corrupt;
mod layer;
mod loss;
mod network;
mod optimizer;

pub use corrupt::{mask_corrupt, mask_corrupt_in_place};
pub use layer::{xavier_init, Activation, DenseLayer, LayerSpec};
pub use loss::{mse_l2_loss, nll_loss, LossKind, PROB_FLOOR};
pub(crate) use loss::weight_sq_sum;
pub use network::{BatchTarget, DropoutPlan, ForwardTrace, Gradients, Network};
pub use optimizer::{LrSchedule, OptimizerKind, OptimizerState};
