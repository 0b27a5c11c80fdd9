//! Monte Carlo experiment harness: declarative configs, deterministic
//! replication, rate reports, and file-level estimation.

pub mod config;
pub mod probe;
pub mod report;
pub mod runner;

pub use config::{
    expand, preset, AlphaSweepSpec, CChoice, Cell, EstimatorKind, ExperimentConfig, GridSpec,
    ModelSpec, PresetDef, Sigma2Mode, PRESETS,
};
pub use probe::{rate_scaling_probe, ProbeReport, ProbeRow};
pub use report::{RateReport, RateRow, CSV_HEADER};
pub use runner::{
    estimate_file, estimate_spectrum, run_experiment, sweep_alpha, EstimateFileOptions,
    FileEstimate,
};
