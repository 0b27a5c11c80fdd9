//! The two factor-count estimators (eigenvalue-gap threshold and sequential
//! Tracy-Widom test) plus the two noise-variance estimators they rely on.

use crate::error::{Error, Result};
use crate::simulate::EigenSpectrum;
use crate::spectra::{beta_np, invert_phi};
use crate::tracy_widom::tw1_quantile;

/// Settings for the gap estimator.
#[derive(Debug, Clone, Copy)]
pub struct GapSettings {
    /// Threshold constant C in d_n = C n^{-2/3} sqrt(2 ln ln n).
    pub threshold_const: f64,
    /// Preliminary bound on the candidate count; default min(20, p-3, n-3).
    pub s_max: Option<usize>,
    /// Require two consecutive small gaps instead of one (default true).
    pub two_gap_rule: bool,
    /// Known noise variance; when absent it is estimated in two passes.
    pub sigma2: Option<f64>,
}

impl GapSettings {
    pub fn new(threshold_const: f64) -> Self {
        Self {
            threshold_const,
            s_max: None,
            two_gap_rule: true,
            sigma2: None,
        }
    }
}

/// Settings for the sequential test estimator.
#[derive(Debug, Clone, Copy)]
pub struct TwSettings {
    /// Per-step significance level, 0 < gamma < 0.5.
    pub gamma: f64,
    /// Known noise variance; when absent it is re-estimated at each step.
    pub sigma2: Option<f64>,
}

impl TwSettings {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            sigma2: None,
        }
    }
}

impl Default for TwSettings {
    fn default() -> Self {
        Self::new(0.005)
    }
}

/// Outcome of one estimator run.
#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub q_hat: usize,
    /// Consecutive gaps of the sequence the decision was made on (the
    /// sigma2-normalized spectrum for the gap estimator, raw eigenvalues
    /// for the sequential test).
    pub gaps: Vec<f64>,
    /// d_n for the gap estimator; the threshold at the stopping step for
    /// the sequential test.
    pub threshold_used: f64,
    pub sigma2_used: f64,
    /// True when the scan exhausted its candidate range without stopping.
    pub saturated: bool,
}

/// Bias-corrected noise estimate with a convergence indicator for the
/// underlying fixed-point iteration.
#[derive(Debug, Clone, Copy)]
pub struct NoiseEstimate {
    pub sigma2: f64,
    pub converged: bool,
}

/// Gap threshold d_n = C n^{-2/3} sqrt(2 ln ln n). Requires n >= 16 so the
/// iterated logarithm is comfortably positive.
pub fn gap_threshold(threshold_const: f64, n: usize) -> Result<f64> {
    if threshold_const <= 0.0 || !threshold_const.is_finite() {
        return Err(Error::Domain {
            what: "gap_threshold",
            detail: format!("C must be positive, got {threshold_const}"),
        });
    }
    if n < 16 {
        return Err(Error::SampleSize {
            what: "gap_threshold",
            detail: format!("n >= 16 required, got {n}"),
        });
    }
    let nf = n as f64;
    Ok(threshold_const * nf.powf(-2.0 / 3.0) * (2.0 * nf.ln().ln()).sqrt())
}

fn default_s_max(p: usize, n: usize) -> Result<usize> {
    let cap = 20usize.min(p.saturating_sub(3)).min(n.saturating_sub(3));
    if cap < 1 {
        return Err(Error::ShortSpectrum { needed: 4, got: p.min(n) });
    }
    Ok(cap)
}

/// Scans the normalized spectrum for the first index j in {0, ..., s_max}
/// whose following gap (and the one after, under the two-gap rule) falls
/// strictly below d_n.
fn gap_scan(
    normalized: &[f64],
    s_max: usize,
    d_n: f64,
    two_gap_rule: bool,
) -> (usize, bool) {
    for j in 0..=s_max {
        let d1 = normalized[j] - normalized[j + 1];
        if d1 < d_n {
            if !two_gap_rule {
                return (j, false);
            }
            let d2 = normalized[j + 1] - normalized[j + 2];
            if d2 < d_n {
                return (j, false);
            }
        }
    }
    (s_max, true)
}

/// Gap estimator: q_hat is the first candidate j whose trailing gaps on the
/// sigma2-normalized spectrum drop below d_n. With unknown sigma2 the scan
/// runs twice: once with the crude trimmed mean at s_max, then again with
/// the bias-corrected estimate at the first-pass count.
pub fn gap_estimate(eigs: &EigenSpectrum, settings: &GapSettings) -> Result<EstimateResult> {
    let p = eigs.p();
    let n = eigs.n();
    let s_max = match settings.s_max {
        Some(s) => s,
        None => default_s_max(p, n)?,
    };
    if s_max < 1 {
        return Err(Error::Domain {
            what: "gap_estimate",
            detail: "s_max must be at least 1".into(),
        });
    }
    if p < s_max + 3 {
        return Err(Error::ShortSpectrum {
            needed: s_max + 3,
            got: p,
        });
    }
    if let Some(s2) = settings.sigma2 {
        if !(s2 > 0.0) || !s2.is_finite() {
            return Err(Error::Domain {
                what: "gap_estimate",
                detail: format!("sigma2 must be positive, got {s2}"),
            });
        }
    }
    let d_n = gap_threshold(settings.threshold_const, n)?;

    let scan_with = |sigma2: f64| -> (usize, bool, Vec<f64>) {
        let normalized: Vec<f64> = eigs.values().iter().map(|v| v / sigma2).collect();
        let (q, sat) = gap_scan(&normalized, s_max, d_n, settings.two_gap_rule);
        let gaps = normalized.windows(2).map(|w| w[0] - w[1]).collect();
        (q, sat, gaps)
    };

    let (sigma2_used, q_hat, saturated, gaps) = match settings.sigma2 {
        Some(s2) => {
            let (q, sat, gaps) = scan_with(s2);
            (s2, q, sat, gaps)
        }
        None => {
            let crude = sigma2_mle(eigs, s_max)?;
            let (q1, _, _) = scan_with(crude);
            let refined = sigma2_corrected(eigs, q1, eigs.c())?.sigma2;
            let (q, sat, gaps) = scan_with(refined);
            (refined, q, sat, gaps)
        }
    };

    Ok(EstimateResult {
        q_hat,
        gaps,
        threshold_used: d_n,
        sigma2_used,
        saturated,
    })
}

/// Sequential test estimator: for k = 1, 2, ..., min(p, n) - 1, tests
/// whether lambda_k exceeds the detection threshold built from the
/// Tracy-Widom quantile at level gamma and the bulk edge for the reduced
/// aspect ratio (p - k)/n; returns k - 1 at the first failure.
pub fn tw_estimate(eigs: &EigenSpectrum, settings: &TwSettings) -> Result<EstimateResult> {
    let p = eigs.p();
    let n = eigs.n();
    if p < 2 || n < 2 {
        return Err(Error::SampleSize {
            what: "tw_estimate",
            detail: format!("p, n >= 2 required, got ({p}, {n})"),
        });
    }
    if !(settings.gamma > 0.0 && settings.gamma < 0.5) {
        return Err(Error::Domain {
            what: "tw_estimate",
            detail: format!("gamma must lie in (0, 0.5), got {}", settings.gamma),
        });
    }
    if let Some(s2) = settings.sigma2 {
        if !(s2 > 0.0) || !s2.is_finite() {
            return Err(Error::Domain {
                what: "tw_estimate",
                detail: format!("sigma2 must be positive, got {s2}"),
            });
        }
    }
    let s_gamma = tw1_quantile(settings.gamma)?;
    let n23 = (n as f64).powf(2.0 / 3.0);
    let c_full = eigs.c();
    let k_max = p.min(n) - 1;

    let mut sigma2_used = settings.sigma2.unwrap_or(f64::NAN);
    let mut threshold_used = f64::NAN;
    for k in 1..=k_max {
        let sigma2_k = match settings.sigma2 {
            Some(s2) => s2,
            None => sigma2_corrected(eigs, k, c_full)?.sigma2,
        };
        let ratio = (p - k) as f64 / n as f64;
        let edge = (1.0 + ratio.sqrt()).powi(2);
        let threshold = sigma2_k * (beta_np(n, p - k) * s_gamma / n23 + edge);
        sigma2_used = sigma2_k;
        threshold_used = threshold;
        if eigs.values()[k - 1] <= threshold {
            return Ok(EstimateResult {
                q_hat: k - 1,
                gaps: eigs.gaps(),
                threshold_used,
                sigma2_used,
                saturated: false,
            });
        }
    }
    Ok(EstimateResult {
        q_hat: k_max,
        gaps: eigs.gaps(),
        threshold_used,
        sigma2_used,
        saturated: true,
    })
}

/// Trimmed-mean noise estimate: the average of the p - q smallest
/// eigenvalues. Downward biased when the bulk is Marchenko-Pastur.
pub fn sigma2_mle(eigs: &EigenSpectrum, q: usize) -> Result<f64> {
    let p = eigs.p();
    if q >= p {
        return Err(Error::Domain {
            what: "sigma2_mle",
            detail: format!("q must be < p, got q = {q} with p = {p}"),
        });
    }
    let tail = &eigs.values()[q..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Bias-corrected noise estimate: iterates
///
///   sigma2 <- [sum_i lambda_i - sum_{j<=q} sigma2 * alpha'_j] / (p - q)
///
/// where alpha'_j inverts the spike-forward map at lambda_j / sigma2, so
/// each detected spike is debited at its population size rather than its
/// inflated sample value. A spike falling below the bulk edge at the
/// current iterate contributes no correction term. Starts from the trimmed
/// mean; stops at relative change below 1e-10 or 200 iterations, reporting
/// convergence in the flag.
pub fn sigma2_corrected(eigs: &EigenSpectrum, q: usize, c: f64) -> Result<NoiseEstimate> {
    let p = eigs.p();
    if q >= p {
        return Err(Error::Domain {
            what: "sigma2_corrected",
            detail: format!("q must be < p, got q = {q} with p = {p}"),
        });
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain {
            what: "sigma2_corrected",
            detail: format!("aspect ratio c must be positive, got {c}"),
        });
    }
    let total: f64 = eigs.values().iter().sum();
    let denom = (p - q) as f64;
    let mut sigma2 = sigma2_mle(eigs, q)?;
    if q == 0 {
        return Ok(NoiseEstimate {
            sigma2,
            converged: true,
        });
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Numerical {
            what: "sigma2_corrected",
            detail: "trimmed-mean starting point is not positive".into(),
        });
    }
    let mut converged = false;
    for _ in 0..200 {
        let mut correction = 0.0;
        for &lambda in &eigs.values()[..q] {
            match invert_phi(lambda / sigma2, c) {
                Ok(alpha_prime) => correction += sigma2 * alpha_prime,
                Err(_) => {} // below the bulk edge at this iterate: bulk-like, no debit
            }
        }
        let next = (total - correction) / denom;
        if !(next > 0.0) || !next.is_finite() {
            return Err(Error::Numerical {
                what: "sigma2_corrected",
                detail: format!("iteration left the positive domain at {next}"),
            });
        }
        let rel = (next - sigma2).abs() / sigma2.abs();
        sigma2 = next;
        if rel < 1e-10 {
            converged = true;
            break;
        }
    }
    Ok(NoiseEstimate { sigma2, converged })
}
