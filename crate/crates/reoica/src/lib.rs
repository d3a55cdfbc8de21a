//! reoica — streaming blind source separation with reservoir-expanded
//! online ICA.
//!
//! The pipeline encodes observations with a fixed random echo-state network,
//! concatenates a scaled readout with the raw observations, whitens the
//! concatenation to the top-n eigenspace of a streaming EMA covariance, and
//! demixes with natural-gradient ICA. Injection diagnostics (IER, SSO,
//! rho_x) quantify whether the injected features survive top-n truncation,
//! and a guarded controller adapts the injection scale to avoid crowding
//! passthrough directions out of the retained basis.
//!
//! See the crate examples for runnable entry points per capability, and the
//! `reoica` binary for the multi-seed benchmark harness.

pub mod baselines;
pub mod config;
pub mod error;
pub mod harness;
pub mod ica;
pub mod linalg;
pub mod metrics;
pub mod mixing;
pub mod pipeline;
pub mod reservoir;
pub mod rsi;
pub mod seeding;
pub mod signals;
pub mod whitening;

pub use error::{Error, Result};
