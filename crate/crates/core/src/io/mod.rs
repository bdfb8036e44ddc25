//! File formats and run artifacts.
//!
//! Everything on disk is little-endian and bit-exact on round-trip:
//!
//! - `MVL1` volumes (one scalar field, f32 intensity or u8 labels)
//! - `NNW1` network checkpoints
//! - `MPB1` vectorized patch batches
//! - plain-text study manifests and tab-separated training logs

mod checkpoint;
mod manifest;
mod mvol;
mod patch_file;
mod train_log;

pub use checkpoint::{read_checkpoint, write_checkpoint, file_digest};
pub use manifest::{Manifest, ManifestEntry};
pub use mvol::{mvol_read, mvol_write, mvol_write_labels, MvolData};
pub use patch_file::{read_patches, write_patches};
pub use train_log::TrainLog;
