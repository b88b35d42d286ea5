//! Quantizer design and verification for distributed Bayesian estimation.
//!
//! A network of `N` sensors observes a scalar parameter `θ`, quantizes its
//! observation locally and ships the symbol to a fusion center. This crate
//! covers the numerical machinery around that setup:
//!
//! - [`prob`]: priors, additive noise laws and latent-variable (HCI) tables.
//! - [`quantizer`]: binary/multi-level quantizers and the induced response curve.
//! - [`fisher`]: posterior Fisher information and its closed forms.
//! - [`design`]: optimal binary quantizer synthesis (closed form, Euler-Lagrange
//!   boundary value problem, Fourier deconvolution).
//! - [`pbpo`]: person-by-person optimization and exhaustive oracles on finite grids.
//! - [`rate`]: bit-budget feasibility and binary-versus-multibit comparisons.
//! - [`simulate`]: Monte Carlo MSE experiments for the arcsine MLE fusion rule.
//!
//! Data-parallel loops go through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod exec;
pub mod fisher;
pub mod io;
pub mod pbpo;
pub mod prob;
pub mod quadrature;
pub mod quantizer;
pub mod rate;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
