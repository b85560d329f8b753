//! Bayesian nonparametric tests of pragmatic hypotheses.
//!
//! A pragmatic hypothesis enlarges a null hypothesis `H0` to every
//! distribution (or regression function) whose smallest dissimilarity to
//! `H0` falls below a threshold `epsilon`. The test draws from a
//! nonparametric posterior, computes that infimum once per draw, and rejects
//! when the fraction of draws inside the enlarged hypothesis is at most
//! `alpha`.
//!
//! The crate is split along that pipeline:
//!
//! - [`dist`]: step and parametric distribution functions, grid functions,
//!   leaf partitions and the dissimilarities between them.
//! - [`samplers`]: Dirichlet process, Polya tree and Gaussian process
//!   posterior draws, plus ingestion of externally produced draw matrices.
//! - [`hypothesis`]: per-draw infimum computations for the adherence,
//!   goodness-of-fit, quantile and two-sample tests, and the decision rules.
//! - [`epsilon`]: threshold calibration strategies and decision regions.
//! - [`optim`]: derivative-free minimizers used by the goodness-of-fit test.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod epsilon;
mod error;
pub mod hypothesis;
pub mod optim;
pub mod samplers;

pub use error::{Error, Result};
