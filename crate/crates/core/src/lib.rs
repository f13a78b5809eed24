//! Numerical laboratory for the geometry of classifier fragility.
//!
//! Data concentrated on an `M`-dimensional manifold embedded in `R^N` leaves
//! most directions of a trained classifier unconstrained. The modules here
//! generate such data, train small classifiers from scratch, and measure how
//! close the resulting discriminants sit to the data:
//!
//! - [`geometry`]: seeded generators for manifold-concentrated datasets.
//! - [`classifiers`]: logistic regression, ReLU MLPs and fully grown trees.
//! - [`probe`]: margins, local complexity and off-manifold weight mass.
//! - [`attacks`]: minimal and gradient-sign perturbations, noise balls, transfer.
//! - [`lid`]: local (MLE) and global (TwoNN) intrinsic dimension estimators.
//! - [`harness`]: dimension sweeps with analytic oracles and reproducible output.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attacks;
pub mod classifiers;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod lid;
pub mod linalg;
pub mod probe;
pub mod rng;
pub mod stats;

pub use error::{Error, ErrorClass, Result};
pub use geometry::{Basis, Dataset, Label, ManifoldSpec};
pub use rng::SeedSpec;
