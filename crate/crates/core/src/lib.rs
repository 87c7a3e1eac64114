//! Incentivized exploration with compensation-induced reward drift over
//! infinite-armed Lipschitz bandits.
//!
//! The arm space `[0,1]^d` is replaced by a uniform grid (a ψ-cover under the
//! ℓ∞ metric). A principal runs UCB over the grid while a myopic agent would
//! play the empirical best arm; the principal pays the empirical-mean gap as
//! compensation, and that payment leaks back into the agent's reported reward
//! as a non-negative drift.
//!
//! Modules:
//! - [`space`]: grid covers, the tuned mesh size, context snapping.
//! - [`env`]: linear mean rewards, Gaussian noise, linear drift.
//! - [`incentive`]: the incentivized UCB loop over a finite arm set.
//! - [`contextual`]: the per-context variant over a product cover.
//! - [`harness`]: multi-trial experiments, baselines, the exact
//!   Bernoulli oracle, diagnostics and CSV output.

// Negated comparisons such as `!(x > 0.0)` are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contextual;
pub mod env;
pub mod error;
pub mod harness;
pub mod incentive;
pub mod rng;
pub mod space;

pub use error::{Error, Result};

/// Artifact version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
