//! Recurrent networks built from proximal activations, `g = g_n o ... o g_1`
//! with `g_i(x) = sigma_i(W_i x + b_i)`, on finite-dimensional real spaces.
//!
//! The crate computes the unique fixed point of `g` when the product of the
//! weight norms is below one, solves the same problem in the product-space
//! form `x = prox_psi(W S x)`, checks candidate points against the
//! associated inclusion system, bounds the norm of the fixed point, and
//! treats continuous-time Hopfield equilibria through the same prox
//! reduction.
//!
//! Batch work (multi-start solves, sampled instances) goes through
//! [`exec::Execution`], which runs on rayon when the `parallel` feature is
//! enabled.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activations;
pub mod block_solver;
pub mod error;
pub mod exec;
pub mod hopfield;
pub mod linalg;
pub mod network;
pub mod sample;

pub use activations::{Activation, ActivationKind, Interval, SubgradientSet};
pub use block_solver::{shift_apply, BlockNetwork, BlockSolveResult, BoundReport, InclusionReport, MonotoneReport};
pub use error::{Error, Result};
pub use exec::Execution;
pub use hopfield::{EquilibriumResult, HopfieldModel, Trajectory};
pub use linalg::{block_norm, spectral_norm, BlockVector, Matrix, NormOptions, Vector};
pub use network::{AnalysisReport, FixedPointResult, Layer, Network, SolverOptions, Trace, TraceRow};
