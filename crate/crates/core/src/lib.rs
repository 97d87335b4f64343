//! Monte Carlo engine for the hard-to-borrow stock model.
//!
//! A stock that is hard to borrow is subject to forced buy-ins, which show
//! up as downward price jumps arriving at a state-dependent intensity `λ`.
//! The log-intensity mean-reverts and is pushed around by price returns.
//! This crate simulates that coupled system under the physical and the
//! pricing measure, computes the Girsanov density between them when the two
//! Brownian drivers are correlated, and prices European options both
//! directly and by reweighting physical paths.
//!
//! Modules, bottom-up:
//!
//! - [`model`]: parameters, state, market prices of risk.
//! - [`correlation`]: correlated drivers from independent increments.
//! - [`simulator`]: Euler paths under `P` or `Q`.
//! - [`girsanov`]: pathwise log-densities and martingale checks.
//! - [`pricing`]: European payoffs, direct and reweighted estimators.
//! - [`config`] and [`harness`]: config files, reports, the `htb` binary.

pub mod config;
pub mod correlation;
pub mod error;
pub mod girsanov;
pub mod harness;
pub mod model;
pub mod pricing;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use error::{HtbError, Result};
pub use model::{HtbParams, MarketState, RiskPremiumSpec};
pub use simulator::{Ensemble, Measure, Path, PathGrid};
