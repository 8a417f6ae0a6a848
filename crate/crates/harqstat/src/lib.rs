//! Monte-Carlo laboratory for the posterior fading-channel and noise
//! statistics of an LDPC-coded HARQ Chase-Combining link.
//!
//! The crate simulates HARQ sessions over a Rician channel with CSCG noise,
//! classifies the per-session channel/noise samples by ACK/NACK outcome into
//! posterior datasets, and characterizes those datasets with multivariate
//! normality tests, two Wilks likelihood-ratio parameter tests, and
//! closed-form ML estimators of (sigma^2, K, beta, theta).

pub mod channel;
pub mod error;
pub mod harqgen;
pub mod io;
pub mod mvntest;
pub mod numerics;
pub mod paramtest;
pub mod phy;

pub use error::{Error, Result};
