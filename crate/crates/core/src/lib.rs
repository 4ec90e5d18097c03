//! Desk-scale simulation of an integrated homodyne detector measuring
//! squeezed vacuum, together with the analysis used to characterise it.
//!
//! The crate is organised along the measurement pipeline:
//!
//! - [`fock`]: truncated Fock-space states (vacuum, squeezed vacuum, pure loss).
//! - [`wigner`]: Wigner functions and their 1/e contours.
//! - [`quadrature`]: quadrature wavefunctions, densities and seeded sampling.
//! - [`povm`]: binned homodyne measurement operators.
//! - [`detector`]: loss budgets, shot-noise clearance, bandwidth and linearity
//!   fits, common-mode rejection, and the MZI balancing lock.
//! - [`squeezing`]: the squeezing/anti-squeezing variance law, its fit, and
//!   squeezing-versus-sideband estimation.
//! - [`tomography`]: iterative maximum-likelihood state reconstruction.
//! - [`config`] and [`pipeline`]: experiment configs and the end-to-end
//!   commands behind the `homodyne` binary.
//!
//! Internally quadratures use `hbar = 1` with vacuum variance 1/2; every
//! variance exposed to callers is in shot-noise units (vacuum = 1).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod config;
pub mod detector;
pub mod fock;
pub mod lm;
pub mod numerics;
pub mod pipeline;
pub mod povm;
pub mod quadrature;
pub mod rng;
pub mod squeezing;
pub mod tomography;
pub mod wigner;

pub use error::{Error, Result};
pub use fock::{DensityMatrix, FockDim, SqueezeParams};
