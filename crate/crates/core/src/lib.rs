//! Copula-graphic estimation for dependent competing risks.
//!
//! The crate recovers the latent marginal survival function of one risk
//! from competing-risks data `(x, delta, z)` when the dependence between
//! the risk of interest and its censoring risk follows a Clayton copula
//! whose parameter is *not* known in advance. The dependence parameter is
//! pinned down by requiring the copula-graphic estimate to agree with a
//! parametric AFT/PH model (three-stage estimator) or with a proportional
//! hazards structure across covariate strata (two-stage estimator).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! the parallel drivers live in the `crisk` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cge;
pub mod copula;
pub mod data;
mod error;
pub mod estimators;
pub mod first_stage;
pub mod inference;
mod linalg;
pub mod marginals;
pub mod optim;
pub mod rng;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
