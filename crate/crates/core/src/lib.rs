//! Compressed sensing reconstruction for measurements whose additive noise is
//! linearly correlated with the noiseless measurements.
//!
//! The measurement model is `y = α·A·x + w`, where `w` is white and
//! uncorrelated with `x`. Ordinary basis pursuit denoising (BPDN) fits part of
//! the correlated noise as signal; dividing the BPDN estimate by the gain `α`
//! compensates for it at no extra cost. The canonical source of such noise is
//! low-rate scalar quantization, modelled by the gain-plus-additive-noise
//! decomposition `Q(ȳ) = α·ȳ + r`.
//!
//! Modules:
//!
//! * [`model`]: domain types and the correlated noise model.
//! * [`siggen`]: seeded generation of sparse signals and Gaussian ensembles.
//! * [`quantizer`]: Lloyd-Max and uniform MMSE scalar quantizers, gain fitting.
//! * [`bpdn`]: Pareto-curve root-finding BPDN solver and the scaled variants.
//! * [`biht`]: binary iterative hard thresholding for 1-bit measurements.
//! * [`optimizer`]: Nelder-Mead simplex search.
//! * [`experiments`]: Monte-Carlo harness, NMSE statistics and result files.

pub mod biht;
pub mod bpdn;
mod error;
pub mod experiments;
pub(crate) mod linalg;
pub mod model;
pub mod optimizer;
pub mod quantizer;
pub mod siggen;

pub use error::{Error, Result};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
