//! Linear bandits with partially observable features.
//!
//! Rewards depend on observed and latent arm features, but policies only see
//! the observed block. The RoLF policies augment the observed features with an
//! orthonormal basis of the complement of their row space, which makes the
//! reward exactly linear in the augmented features, and then estimate the
//! reward parameter with a doubly robust Lasso or ridge estimator.
//!
//! Modules, bottom up:
//!
//! - [`linalg`]: rank reduction, complement basis, augmentation, Lasso and
//!   ridge solvers.
//! - [`env`]: synthetic and lower-bound problem instances.
//! - [`dr`]: coupled pseudo-actions and the doubly robust estimators.
//! - [`policy`]: RoLF variants and baselines behind one [`policy::Policy`] trait.
//! - [`harness`]: configuration, multi-seed runs, aggregation and outputs.

// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dr;
pub mod env;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
