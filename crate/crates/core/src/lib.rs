//! Weighted regularization of linear ill-posed problems through fictitious null spaces.
//!
//! The singular vectors of an injective compact operator that belong to singular values
//! drowned by noise span a subspace the data cannot see. Treating that subspace as a
//! null space lets one weight each basis function by how much of it survives the
//! projection onto the visible part, which removes the minimum-norm bias of standard
//! sparsity and Tikhonov regularization.
//!
//! - [`linop`]: singular systems, truncated operators and projections
//! - [`weighting`]: projection norms, thresholded weights and the truncation rule
//! - [`solvers`]: ℓ¹, Tikhonov and basis-pursuit reconstructions, discrepancy principle
//! - [`theory`]: numerical certificates for the recovery and convergence statements
//! - [`models`]: heat-conduction and annulus forward matrices, noise, matrix files
//! - [`experiment`]: experiment configuration, pipelines, verification and plots

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod linop;
pub mod models;
pub mod solvers;
pub mod theory;
pub mod weighting;

pub use error::{Error, Result};
