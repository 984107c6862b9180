//! Graph convolution with Chebyshev filters and Graclus pooling, fused with an
//! edge-selected relation network.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: weighted graphs, Laplacians, the exact spectral filter, and
//!   the coarsening hierarchy used for pooling.
//! - [`numerics`]: seeded RNG, parameter tensors, Adam, gradient checking,
//!   checkpoints.
//! - [`layers`]: forward/backward rules for every layer in the pipeline.
//! - [`relation`]: top-κ edge selection, the per-pair relation head and the
//!   shared-MLP relation network baseline.
//! - [`model`]: the composed classifier, training and Monte-Carlo CV.
//! - [`data`]: the covariance-structured synthetic generator and CSV ingestion.
//! - [`analysis`]: metrics, simple baselines, Ward clustering and survival
//!   statistics.

pub mod analysis;
pub mod data;
pub mod error;
pub mod graph;
pub mod layers;
pub mod model;
pub mod numerics;
pub mod relation;

pub use error::{Error, Result};
