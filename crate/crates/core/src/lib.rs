//! Link-level simulator for Gaussian-modulated coherent-state CV-QKD.
//!
//! A run draws Alice's symbols, shapes them into an optical field, passes the
//! field through a lossy noisy channel and Bob's coherent receiver, converts
//! the photocurrent into shot-noise units, estimates transmittance and excess
//! noise, and evaluates the key rate and optional reconciliation.

pub mod channel;
pub mod dsp;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod postproc;
pub mod rx;
pub mod scalar;
pub mod security;
pub mod signal;
pub mod tx;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CovarianceMatrix = security::CovarianceMatrix<f64>;
pub type SecurityParams = security::SecurityParams<f64>;
pub type LinkState = security::LinkState<f64>;
pub type KeyFraction = security::KeyFraction<f64>;
