//! Batch active learning with Cluster-Margin.
//!
//! The crate is organised around the stages of a large-batch active learning
//! loop:
//!
//! * [`data`]: dense matrices, datasets, the labeled/unlabeled pool, the ALXM
//!   binary format, CSV loading and synthetic Gaussian mixtures.
//! * [`hac`]: average-linkage agglomerative clustering with a distance
//!   threshold, plus the multi-round graph variant and nearest-centroid
//!   assignment used to scale it.
//! * [`model`]: a one-hidden-layer network that supplies class probabilities,
//!   penultimate-layer embeddings and gradient embeddings.
//! * [`samplers`]: Cluster-Margin round-robin selection and the Margin,
//!   BADGE (k-means++), CoreSet (k-center) and Random baselines.
//! * [`estimators`]: empirical, importance-weighted, cluster-stratified and
//!   top-k risk estimators.
//! * [`theory`]: Monte Carlo checks for volume-based samplers and the
//!   Cluster-MarginV margin algorithm.
//! * [`driver`]: the end-to-end experiment loop, metrics and SVG plots.

pub mod data;
pub mod driver;
pub mod error;
pub mod estimators;
pub mod hac;
pub mod model;
pub mod rng;
pub mod samplers;
pub mod theory;

pub use error::{Error, Result};
