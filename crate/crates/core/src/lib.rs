//! Spectral estimators and entrywise eigenvector perturbation diagnostics for
//! random matrices whose expectation has low rank.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] holds the symmetric eigensolvers (dense Householder/QL and
//!   Lanczos with full reorthogonalization), truncated SVD through the
//!   symmetric dilation, the matrix sign function and the norm toolbox.
//! * [`ensembles`] samples the four generative models (Z2 synchronization,
//!   two- and three-block SBM, noisy matrix completion) and builds their
//!   closed-form population models and assumption audits.
//! * [`estimators`] implements the vanilla spectral estimators and the
//!   first-order linearization `A U* (Λ*)⁻¹`.
//! * [`diagnostics`] computes the ℓ∞ / 2→∞ error decompositions,
//!   misclassification rates, leave-one-out probes and tail-bound audits.
//! * [`experiments`] drives seeded, parallel Monte Carlo grids and writes CSV.

pub mod diagnostics;
pub mod ensembles;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod linalg;
pub mod rng;

pub use error::{Error, Result};
