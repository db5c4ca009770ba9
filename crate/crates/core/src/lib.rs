//! Routine-blood-value diagnosis engine.
//!
//! The crate bundles everything that runs in-process:
//!
//! * [`data`]: records, CSV ingestion with mean imputation, stratified folds,
//!   scalers and a synthetic attractor generator.
//! * [`chaos`]: the congruent generator and the reservoir transform it feeds.
//! * [`lognnet`]: float LogNNet inference and training of the output layers.
//! * [`quantize`]: 16-bit model form, the model file, an integer-weight
//!   emulator of the microcontroller inference loop, and RAM accounting.
//! * [`hgb`]: histogram gradient boosting (the cloud model).
//! * [`analysis`]: Pearson matrices, threshold rules and feature-subset search.
//! * [`wire`]: the `T`/`FN` serial framing codec.
//! * [`validate`]: the trainer abstraction and k-fold evaluation.

pub mod analysis;
pub mod chaos;
pub mod data;
pub mod error;
pub mod hgb;
pub mod lognnet;
pub mod quantize;
pub mod validate;
pub mod wire;

pub use error::{Error, ModelFileError, Result};
