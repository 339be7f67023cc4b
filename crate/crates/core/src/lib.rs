//! Simulation and evaluation toolkit for information-diffusion predictors.
//!
//! The crate generates (or ingests) spreading cascades, scores how disordered a
//! cascade set is through the average pairwise comparison entropy (APCE),
//! evaluates ranking predictors with MAP and its size-rescaled form SMAP, and
//! fits the exponential-decay curve `y = y0 + A·exp(-B·x)` that summarises a
//! predictor's accuracy as a function of data disorder.
//!
//! Module map:
//!
//! - [`graph`]: Erdős–Rényi and static-model scale-free graphs.
//! - [`cascade`] / [`sim`]: cascade types and IC / LT / SI spreading.
//! - [`entropy`]: pairwise order statistics, PCE, APCE, block entropy.
//! - [`metrics`]: AP, MAP, SMAP.
//! - [`embed`]: heat-kernel embedding predictors (CDK, PAE, IAE) and baselines.
//! - [`fit`]: variable-projection exponential-decay fitting.
//! - [`dataio`]: file formats, subsampling, external rankings.
//! - [`harness`] / [`svg`]: experiment cells, sweeps, curve fitting and plots.

pub mod cascade;
pub mod dataio;
pub mod embed;
pub mod entropy;
pub mod error;
pub mod fit;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod rng;
pub mod sim;
pub mod svg;

pub use cascade::{Cascade, CascadeSet, NodeId};
pub use error::{Error, Result};
pub use graph::{Graph, GraphSpec, Topology};
