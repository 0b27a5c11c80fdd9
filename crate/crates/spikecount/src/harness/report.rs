//! Rate reports and their CSV rendering.
//!
//! Column order is part of the tool's contract:
//! model,estimator,p,n,c,C,gamma,sigma2_mode,reps,misest,overest,underest,
//! mean_sigma2,seconds plus the appended binomial standard errors
//! se_misest,se_overest,se_underest. External plotting reads these by name.

use serde::Serialize;

use crate::harness::config::{EstimatorKind, Sigma2Mode};

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub model: String,
    pub estimator: EstimatorKind,
    pub p: usize,
    pub n: usize,
    /// Realized aspect ratio p/n.
    pub c: f64,
    /// Gap-threshold constant in effect (post-calibration); None for rows
    /// that never needed one.
    pub threshold_const: Option<f64>,
    pub gamma: f64,
    pub sigma2_mode: Sigma2Mode,
    pub reps: usize,
    pub misest: f64,
    pub overest: f64,
    pub underest: f64,
    /// Mean sigma2 used by the estimator across successful replications.
    pub mean_sigma2: Option<f64>,
    /// Wall time of the whole grid point (generation and eigenvalues are
    /// shared, so co-run estimator rows show the same figure).
    pub seconds: f64,
    /// Replications where the estimator failed to produce a count; they
    /// are folded into the rates as misestimations.
    pub failed: usize,
}

impl RateRow {
    pub fn se_misest(&self) -> f64 {
        binomial_se(self.misest, self.reps)
    }

    pub fn se_overest(&self) -> f64 {
        binomial_se(self.overest, self.reps)
    }

    pub fn se_underest(&self) -> f64 {
        binomial_se(self.underest, self.reps)
    }
}

fn binomial_se(rate: f64, reps: usize) -> f64 {
    (rate * (1.0 - rate) / reps as f64).sqrt()
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
}

pub const CSV_HEADER: [&str; 17] = [
    "model",
    "estimator",
    "p",
    "n",
    "c",
    "C",
    "gamma",
    "sigma2_mode",
    "reps",
    "misest",
    "overest",
    "underest",
    "mean_sigma2",
    "seconds",
    "se_misest",
    "se_overest",
    "se_underest",
];

impl RateReport {
    /// Full CSV including wall times.
    pub fn to_csv(&self) -> String {
        self.render_csv(true)
    }

    /// CSV with the timing column blanked; byte-identical across runs and
    /// worker counts for a fixed master seed.
    pub fn canonical_csv(&self) -> String {
        self.render_csv(false)
    }

    fn render_csv(&self, with_timing: bool) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("header");
        for row in &self.rows {
            let rec = [
                row.model.clone(),
                row.estimator.to_string(),
                row.p.to_string(),
                row.n.to_string(),
                fmt_f64(row.c),
                row.threshold_const.map(fmt_f64).unwrap_or_default(),
                fmt_f64(row.gamma),
                row.sigma2_mode.to_string(),
                row.reps.to_string(),
                fmt_f64(row.misest),
                fmt_f64(row.overest),
                fmt_f64(row.underest),
                row.mean_sigma2.map(fmt_f64).unwrap_or_default(),
                if with_timing {
                    fmt_f64(row.seconds)
                } else {
                    String::new()
                },
                fmt_f64(row.se_misest()),
                fmt_f64(row.se_overest()),
                fmt_f64(row.se_underest()),
            ];
            w.write_record(&rec).expect("row");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Shortest exact decimal representation; '.' separator by construction.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
