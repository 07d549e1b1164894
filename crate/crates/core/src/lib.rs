//! Monte Carlo simulation of a MU-MIMO uplink with unknown inter-cell
//! interference, an Inverse-Gamma model of that interference fitted by moment
//! matching, and rate adaptation with a guaranteed target outage probability.
//!
//! Module map:
//!
//! - [`numerics`]: incomplete gamma functions, Hermitian solves, correlated
//!   complex Gaussian sampling.
//! - [`scenario`]: drop geometry, large-scale fading, spatial correlation,
//!   pilot assignment.
//! - [`channel`]: small-scale channel draws, pilot observations, channel
//!   estimation.
//! - [`receiver`]: MR/RZF combining and use-and-then-forget SINR terms.
//! - [`bayes`]: variance posterior and the moment-matched Inverse-Gamma fit.
//! - [`outage`]: outage probability, ε-outage rate, fixed-margin baseline.
//! - [`experiments`]: drop orchestration and empirical/analytical comparison.

// Negated float comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod numerics;
pub mod outage;
pub mod receiver;
pub mod scenario;

pub use error::{Error, Result};
