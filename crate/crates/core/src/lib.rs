//! Synthetic time-series generation and evaluation.
//!
//! The crate is organised around [`TimeSeriesDataset`], an immutable
//! `[N, T, D]` tensor with optional static or per-timestep labels. Every
//! randomized routine takes an explicit [`RngSeed`] and is bit-reproducible
//! for equal inputs.
//!
//! * [`generators`]: sine-const, sine and Gaussian-process simulators.
//! * [`abc`]: rejection-sampling ABC and random-search simulator fitting.
//! * [`augment`]: noise, flips, warps, slicing and DTW barycenter averaging.
//! * [`neural`]: dense nets with hand-written gradients, Adam, β-VAE and GAN.
//! * [`metrics`]: similarity, diversity, consistency, downstream gain, privacy.
//! * [`embed`]: PCA / t-SNE embeddings and periodograms.

pub mod abc;
pub mod augment;
pub mod dataset;
pub mod embed;
mod error;
pub mod generators;
pub mod io;
pub mod metrics;
pub mod neural;
pub mod rng;
pub mod stats;

pub use dataset::{Labels, ScalerState, TimeSeriesDataset};
pub use error::{Error, Result};
pub use rng::RngSeed;
