//! Convergence-rate probe: how fast consecutive-eigenvalue gaps shrink
//! with n, measured on the structured Gaussian sampler so that large n
//! stays affordable.
//!
//! Noise gaps (just past the last spike) shrink like n^{-2/3}; gaps inside
//! an equal-strength spike group shrink like n^{-1/2}; gaps between
//! distinct spikes converge to a positive constant. The estimators'
//! threshold sits between the first two rates, which is exactly what this
//! probe verifies.

use crate::error::{Error, Result};
use crate::simulate::{derive_seed, spiked_wishart_eigs_fast};
use crate::spectra::SpikeSpec;

#[derive(Debug, Clone)]
pub struct ProbeRow {
    pub n: usize,
    pub p: usize,
    /// Median gap at the noise boundary, lambda_{q0+1} - lambda_{q0+2}.
    pub median_noise_gap: f64,
    /// Median gap inside the first equal-spike group, if any.
    pub median_equal_gap: Option<f64>,
    /// Median gap between the first two distinct spike groups, if any.
    pub median_distinct_gap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    /// Least-squares slope of ln(median noise gap) against ln(n).
    pub noise_slope: f64,
    /// Same for the equal-spike gap, when the template has one.
    pub equal_slope: Option<f64>,
}

/// Runs `reps` draws at every n in `n_grid` (p = round(c n)) and fits
/// log-log slopes through the per-n median gaps. The grid must have at
/// least four points spanning at least an 8x range so the fit means
/// something.
pub fn rate_scaling_probe(
    spikes: &[(f64, usize)],
    sigma2: f64,
    c: f64,
    n_grid: &[usize],
    reps: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if n_grid.len() < 4 {
        return Err(Error::Config(format!(
            "probe grid needs at least 4 sample sizes, got {}",
            n_grid.len()
        )));
    }
    let (lo, hi) = (
        *n_grid.iter().min().unwrap(),
        *n_grid.iter().max().unwrap(),
    );
    if lo < 16 || (hi as f64) < 8.0 * lo as f64 {
        return Err(Error::Config(format!(
            "probe grid must span an 8x range with n >= 16, got [{lo}, {hi}]"
        )));
    }
    if reps < 1 {
        return Err(Error::Config("probe needs at least one replication".into()));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Config(format!("aspect ratio must be positive, got {c}")));
    }

    // gap index bookkeeping on the descending spectrum (0-based):
    // group g starts at the running multiplicity sum
    let q0: usize = spikes.iter().map(|s| s.1).sum();
    let equal_start = {
        let mut start = 0;
        spikes.iter().find_map(|&(_, mult)| {
            let here = start;
            start += mult;
            (mult >= 2).then_some(here)
        })
    };
    let distinct_boundary = (spikes.len() >= 2).then(|| spikes[0].1);

    let mut rows = Vec::with_capacity(n_grid.len());
    for (idx, &n) in n_grid.iter().enumerate() {
        let p = (c * n as f64).round() as usize;
        if q0 + 2 > n.min(p) {
            return Err(Error::Config(format!(
                "grid point ({p}, {n}) too small for q0 = {q0}"
            )));
        }
        let spec = SpikeSpec::new(spikes, sigma2, p)?;
        let mut noise = Vec::with_capacity(reps);
        let mut equal = Vec::with_capacity(reps);
        let mut distinct = Vec::with_capacity(reps);
        for rep in 0..reps {
            let eigs =
                spiked_wishart_eigs_fast(&spec, n, derive_seed(seed, idx as u64, rep as u64));
            noise.push(eigs[q0] - eigs[q0 + 1]);
            if let Some(s) = equal_start {
                equal.push(eigs[s] - eigs[s + 1]);
            }
            if let Some(b) = distinct_boundary {
                distinct.push(eigs[b - 1] - eigs[b]);
            }
        }
        rows.push(ProbeRow {
            n,
            p,
            median_noise_gap: median(&mut noise),
            median_equal_gap: equal_start.map(|_| median(&mut equal)),
            median_distinct_gap: distinct_boundary.map(|_| median(&mut distinct)),
        });
    }

    let ln_n: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ln_noise: Vec<f64> = rows.iter().map(|r| r.median_noise_gap.ln()).collect();
    let noise_slope = lsq_slope(&ln_n, &ln_noise);
    let equal_slope = equal_start.map(|_| {
        let ln_equal: Vec<f64> = rows
            .iter()
            .map(|r| r.median_equal_gap.unwrap().ln())
            .collect();
        lsq_slope(&ln_n, &ln_equal)
    });

    Ok(ProbeReport {
        rows,
        noise_slope,
        equal_slope,
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_probe_has_negative_slope_and_no_spike_columns() {
        let report =
            rate_scaling_probe(&[], 1.0, 1.0, &[16, 32, 64, 128, 160], 60, 42).unwrap();
        assert_eq!(report.rows.len(), 5);
        assert!(report.noise_slope < -0.3, "slope {}", report.noise_slope);
        assert!(report.equal_slope.is_none());
        assert!(report.rows[0].median_equal_gap.is_none());
        assert!(report.rows[0].median_distinct_gap.is_none());
        for w in report.rows.windows(2) {
            assert!(w[1].median_noise_gap < w[0].median_noise_gap);
        }
    }

    #[test]
    fn equal_pair_probe_reports_both_gaps() {
        let report =
            rate_scaling_probe(&[(5.0, 2)], 1.0, 1.0, &[24, 48, 96, 192], 40, 7).unwrap();
        let row = &report.rows[0];
        assert!(row.median_equal_gap.is_some());
        assert!(row.median_distinct_gap.is_none()); // single group
        assert!(report.equal_slope.unwrap() < 0.0);
        // intra-group gaps shrink slower than noise gaps
        assert!(report.equal_slope.unwrap() > report.noise_slope - 0.6);
    }

    #[test]
    fn distinct_pair_gap_is_located_after_first_group() {
        let report = rate_scaling_probe(
            &[(8.0, 1), (4.0, 1)],
            1.0,
            1.0,
            &[32, 64, 128, 256],
            40,
            9,
        )
        .unwrap();
        let last = report.rows.last().unwrap();
        // gap between two well-separated spikes stays order-one
        assert!(last.median_distinct_gap.unwrap() > 1.0);
        assert!(last.median_noise_gap < 0.5);
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        assert!(rate_scaling_probe(&[], 1.0, 1.0, &[16, 32, 64], 10, 0).is_err());
        assert!(rate_scaling_probe(&[], 1.0, 1.0, &[16, 20, 24, 32], 10, 0).is_err());
        assert!(rate_scaling_probe(&[], 1.0, 1.0, &[8, 16, 32, 64], 10, 0).is_err());
        assert!(rate_scaling_probe(&[], 1.0, 1.0, &[16, 32, 64, 128], 0, 0).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let a = rate_scaling_probe(&[(5.0, 2)], 1.0, 1.0, &[16, 32, 64, 128], 10, 3).unwrap();
        let b = rate_scaling_probe(&[(5.0, 2)], 1.0, 1.0, &[16, 32, 64, 128], 10, 3).unwrap();
        assert_eq!(a.noise_slope, b.noise_slope);
        assert_eq!(
            a.rows[2].median_equal_gap.unwrap(),
            b.rows[2].median_equal_gap.unwrap()
        );
    }
}
