//! Pivotal brain-network nodes from longitudinal region volumes.
//!
//! The pipeline runs: volume table ([`cohort`]) → per-patient differential
//! graphs ([`diffgraph`]) → weighted multi-view Laplacian and l2,1-regularised
//! spectral selection ([`spectral`], [`mfs`]) → consensus over a (λ, k) grid →
//! induced subgraphs ([`subgraph`]) → discrimination scoring ([`classify`]).
//! [`synth`] generates seeded cohorts for end-to-end checks.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the pipeline uses.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod cohort;
pub mod diffgraph;
pub mod error;
pub mod linalg;
pub mod mfs;
pub mod scalar;
pub mod spectral;
pub mod subgraph;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = linalg::Mat<f64>;
pub type Matrix32 = linalg::Mat<f32>;
pub type DifferentialGraph = diffgraph::DiffGraph<f64>;
pub type DifferentialGraph32 = diffgraph::DiffGraph<f32>;
pub type RatioVector = diffgraph::RatioVector<f64>;
pub type EigenDecomposition = spectral::EigenDecomposition<f64>;
pub type LaplacianMatrix = spectral::LaplacianMatrix<f64>;
pub type SelectionResult = mfs::SelectionResult<f64>;
pub type SolverState = mfs::SolverState<f64>;
pub type LinearModel = classify::LinearModel<f64>;
pub type RocCurve = classify::RocCurve<f64>;
