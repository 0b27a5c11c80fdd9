//! Estimating the number of factors (spikes) in a high-dimensional spiked
//! covariance model from sample eigenvalues.
//!
//! The crate provides the population-side theory (the spike-forward map
//! and its inverse, detectability thresholds), two estimators of the
//! factor count (an eigenvalue-gap threshold rule and a sequential
//! Tracy-Widom test), noise-variance estimators, data-driven calibration
//! of the gap threshold, and a deterministic Monte Carlo harness with
//! named model presets and CSV reporting. A CLI (`spikecount`) exposes
//! the pipeline end to end.
//!
//! Everything downstream of a seed is reproducible: replications derive
//! their RNG streams from (master seed, cell, replication index), so
//! reports are byte-identical across worker counts.

pub mod calibrate;
pub mod error;
pub mod estimators;
pub mod harness;
mod linalg;
pub mod simulate;
pub mod spectra;
pub mod tracy_widom;

pub use error::{Error, Result};
