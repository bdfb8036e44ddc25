//! Semi-supervised brain lesion segmentation with denoising autoencoders.
//!
//! The crate covers the full desk-scale pipeline: intensity normalization
//! (histogram matching, z-scoring), multi-sequence 2D patch extraction and
//! rotation augmentation, greedy layer-wise DAE pre-training with supervised
//! fine-tuning for voxel-wise classification, reconstruction-error novelty
//! detection (ND and its cascaded variant CND) with Otsu / mean+kσ
//! binarization, connected-component false-positive rejection, and Dice
//! evaluation over the WT/TC/AT tumor regions.
//!
//! Numeric code is generic over the scalar type via [`Scalar`] (implemented
//! for `f32` and `f64`); the concrete aliases at the crate root fix the
//! production precision: parameters and activations in `f32`, loss and
//! gradient accumulation always in `f64`. Everything that draws randomness
//! takes a [`SeedRng`], and a fixed seed reproduces results bit for bit.

pub mod autoencoder;
pub mod error;
pub mod io;
pub mod nn;
pub mod novelty;
pub mod patches;
pub mod phantom;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod scalar;
pub mod volume;

pub use error::{Error, Result};
pub use rng::SeedRng;
pub use scalar::Scalar;

/// Production scalar type: parameters, activations, and voxels in 32-bit.
pub type Real = f32;

/// Intensity volume at production precision.
pub type RealVolume = volume::Volume<Real>;
/// Study at production precision.
pub type RealStudy = volume::Study<Real>;
/// Patch batch at production precision.
pub type RealPatchBatch = patches::PatchBatch<Real>;
/// Network at production precision.
pub type RealNetwork = nn::Network<Real>;
/// Role-tagged trained network at production precision.
pub type RealTrainedNetwork = autoencoder::TrainedNetwork<Real>;
/// Error map at production precision.
pub type RealErrorMap = novelty::ErrorMap<Real>;




