//! Magnitude of finite point sets in Euclidean space and the magnitude
//! distance between them.
//!
//! The crate is organised bottom-up:
//!
//! - [`points`], [`rng`], [`io`]: point sets, kernels, deduplication,
//!   deterministic sampling and CSV.
//! - [`magnitude`]: weightings, magnitude, the Neumann approximation,
//!   spectral diagnostics and coordinate gradients.
//! - [`distance`]: magnitude distance, the multi-scale loss and property
//!   checkers (triangle slack, boundedness, limits, the cross-polytope
//!   counterexample).
//! - [`baselines`]: MMD and sliced Wasserstein.
//! - [`experiments`]: seeded study runners emitting CSV and JSON.
//! - [`maggn`]: a small push-forward generator trained on the multi-scale
//!   loss with hand-written backpropagation.
//!
//! Trials and projections are data-parallel through [`exec::Execution`];
//! build without the default `parallel` feature to drop rayon.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod distance;
mod error;
pub mod exec;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod maggn;
pub mod magnitude;
pub mod points;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Execution;
pub use linalg::Matrix;
pub use points::PointSet;
pub use rng::RngState;
