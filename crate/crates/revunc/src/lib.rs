//! Macroeconomic uncertainty measured from real-time data revisions.
//!
//! The crate turns archives of data vintages into country-level uncertainty
//! indices and downstream impact estimates:
//!
//! 1. [`vintages`] — publication triangles, within-vintage growth rates and
//!    first/final release pairs;
//! 2. [`ssm`] / [`band`] — linear-Gaussian state-space tools (Kalman filter,
//!    simulation smoother, banded precision sampling);
//! 3. [`svol`] — stochastic-volatility component sampler with the
//!    log-chi-squared mixture approximation and an interweaving sweep;
//! 4. [`newsnoise`] — the revision model: a latent "true" series plus news
//!    and noise revision errors, each with time-varying volatility, estimated
//!    by Gibbs sampling; the uncertainty index is the posterior of the news
//!    volatilities;
//! 5. [`bvar`] — Bayesian vector autoregressions with recursive
//!    identification for impulse responses to uncertainty shocks;
//! 6. [`aggregate`] — standardization, weighted multi-country aggregation,
//!    labor-market-regime splits and forecast comparisons;
//! 7. [`pipeline`] — the staged batch driver behind the `revunc` binary.
//!
//! Every sampler takes an explicit RNG; identical seeds give bit-identical
//! results.

pub mod aggregate;
pub mod band;
pub mod bvar;
pub mod dist;
pub mod error;
pub mod fixture;
pub mod newsnoise;
pub mod pipeline;
pub mod plot;
pub mod quarter;
pub mod ssm;
pub mod stats;
pub mod svol;
pub mod vintages;

pub use error::{Error, Result};
pub use quarter::Quarter;
