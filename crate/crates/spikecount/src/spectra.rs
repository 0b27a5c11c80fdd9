//! Population spectrum types and the deterministic random-matrix functions
//! used by the estimators: the spike-to-sample-eigenvalue map `phi`, its
//! inverse on the detectable branch, the Marchenko-Pastur bulk edge, the
//! finite-size scaling constant `beta_np`, and the detectability test.

use crate::error::{Error, Result};

/// Population spectrum of a spiked covariance matrix.
///
/// The covariance is `diag(alpha_1 + s2, ..., alpha_K + s2, s2, ..., s2)`
/// (each spike repeated per its multiplicity) in some orthonormal basis,
/// where `s2` is the noise variance. Strengths are stored strictly
/// decreasing; equal factors are expressed through multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeSpec {
    spikes: Vec<(f64, usize)>,
    sigma2: f64,
    p: usize,
}

impl SpikeSpec {
    /// Builds a validated spec from `(strength, multiplicity)` pairs.
    ///
    /// Requirements: strengths strictly decreasing and positive,
    /// multiplicities positive, `sigma2 > 0`, and `q0 < p` where
    /// `q0` is the total number of spiked directions.
    pub fn new(spikes: &[(f64, usize)], sigma2: f64, p: usize) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidSpikes(format!(
                "sigma2 must be positive and finite, got {sigma2}"
            )));
        }
        if p == 0 {
            return Err(Error::InvalidSpikes("dimension p must be positive".into()));
        }
        let mut prev = f64::INFINITY;
        for &(a, m) in spikes {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidSpikes(format!(
                    "spike strengths must be positive and finite, got {a}"
                )));
            }
            if a >= prev {
                return Err(Error::InvalidSpikes(format!(
                    "spike strengths must be strictly decreasing, got {a} after {prev}"
                )));
            }
            if m == 0 {
                return Err(Error::InvalidSpikes(
                    "spike multiplicities must be positive".into(),
                ));
            }
            prev = a;
        }
        let q0: usize = spikes.iter().map(|&(_, m)| m).sum();
        if q0 >= p {
            return Err(Error::InvalidSpikes(format!(
                "total spike count q0 = {q0} must be smaller than p = {p}"
            )));
        }
        Ok(Self {
            spikes: spikes.to_vec(),
            sigma2,
            p,
        })
    }

    /// Convenience constructor from raw strengths (possibly with repeats,
    /// any order); equal strengths are merged into multiplicities and
    /// non-positive entries are dropped.
    pub fn from_strengths(strengths: &[f64], sigma2: f64, p: usize) -> Result<Self> {
        let mut kept: Vec<f64> = strengths.iter().copied().filter(|a| *a > 0.0).collect();
        kept.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut merged: Vec<(f64, usize)> = Vec::new();
        for a in kept {
            match merged.last_mut() {
                Some((prev, m)) if *prev == a => *m += 1,
                _ => merged.push((a, 1)),
            }
        }
        Self::new(&merged, sigma2, p)
    }

    /// White-noise spec (no spikes).
    pub fn white(sigma2: f64, p: usize) -> Result<Self> {
        Self::new(&[], sigma2, p)
    }

    /// Distinct spike strengths, strictly decreasing.
    pub fn strengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.spikes.iter().map(|&(a, _)| a)
    }

    /// `(strength, multiplicity)` pairs, strictly decreasing in strength.
    pub fn spikes(&self) -> &[(f64, usize)] {
        &self.spikes
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Total number of spiked directions, `q0 = sum of multiplicities`.
    pub fn q0(&self) -> usize {
        self.spikes.iter().map(|&(_, m)| m).sum()
    }

    /// Normalized spikes `alpha'_k = alpha_k / sigma2 + 1`, all > 1.
    pub fn normalized_spikes(&self) -> Vec<f64> {
        self.spikes
            .iter()
            .map(|&(a, _)| a / self.sigma2 + 1.0)
            .collect()
    }

    /// Population eigenvalues in descending order, length `p`:
    /// `sigma2 * alpha'_k` per spiked direction, then `sigma2` repeated.
    pub fn population_eigenvalues(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.p);
        for &(a, m) in &self.spikes {
            out.extend(std::iter::repeat(a + self.sigma2).take(m));
        }
        out.extend(std::iter::repeat(self.sigma2).take(self.p - self.q0()));
        out
    }
}

/// Dimension pair `(p, n)`; the aspect ratio `c = p/n` is always computed
/// from the stored integers so it cannot drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AspectRatio {
    p: usize,
    n: usize,
}

impl AspectRatio {
    pub fn new(p: usize, n: usize) -> Result<Self> {
        if p == 0 || n == 0 {
            return Err(Error::InvalidSpikes(format!(
                "dimensions must be positive, got p = {p}, n = {n}"
            )));
        }
        Ok(Self { p, n })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Aspect ratio `c = p/n`.
    pub fn c(&self) -> f64 {
        self.p as f64 / self.n as f64
    }
}

/// Limiting location of the sample eigenvalue generated by a normalized
/// population spike `alpha'`: `phi(a) = a + c*a/(a - 1)`.
///
/// For `alpha' > 1 + sqrt(c)` the value strictly exceeds the bulk edge
/// `(1 + sqrt(c))^2`; at the pole `alpha' = 1` the map is undefined.
pub fn phi(alpha_prime: f64, c: f64) -> Result<f64> {
    if alpha_prime == 1.0 {
        return Err(Error::Domain {
            what: "phi",
            detail: "alpha' = 1 is the pole of a + c*a/(a - 1)".into(),
        });
    }
    Ok(alpha_prime + c * alpha_prime / (alpha_prime - 1.0))
}

/// Inverse of [`phi`] on the branch `alpha' >= 1 + sqrt(c)`.
///
/// Solves `a^2 - (m + 1 - c) a + m = 0` and returns the larger root,
/// which is the unique preimage on the detectable branch. Requires
/// `m >= (1 + sqrt(c))^2`; exactly at the edge the double root
/// `1 + sqrt(c)` is returned.
pub fn invert_phi(m: f64, c: f64) -> Result<f64> {
    let edge = (1.0 + c.sqrt()).powi(2);
    if m < edge {
        return Err(Error::Domain {
            what: "invert_phi",
            detail: format!(
                "m = {m} lies below the spike detection boundary (1 + sqrt(c))^2 = {edge}; \
                 no real preimage on the detectable branch"
            ),
        });
    }
    let half_sum = m + 1.0 - c;
    // Guard the discriminant against cancellation right at the edge.
    let disc = (half_sum * half_sum - 4.0 * m).max(0.0);
    Ok(0.5 * (half_sum + disc.sqrt()))
}

/// Right edge `sigma2 * (1 + sqrt(c))^2` of the Marchenko-Pastur noise bulk.
pub fn bulk_edge(sigma2: f64, c: f64) -> f64 {
    sigma2 * (1.0 + c.sqrt()).powi(2)
}

/// Finite-size scaling constant
/// `beta_{n,p} = (1 + sqrt(p/n)) * (1 + sqrt(n/p))^(1/3)`
/// for the largest-eigenvalue fluctuation law.
pub fn beta_np(n: usize, p: usize) -> f64 {
    let pn = p as f64 / n as f64;
    (1.0 + pn.sqrt()) * (1.0 + (1.0 / pn).sqrt()).cbrt()
}

/// Per-spike detectability: `alpha_k > sigma2 * sqrt(c)` strictly
/// (equivalently `alpha'_k > 1 + sqrt(c)`). One flag per distinct spike.
pub fn detectable(spec: &SpikeSpec, c: f64) -> Vec<bool> {
    let threshold = spec.sigma2() * c.sqrt();
    spec.strengths().map(|a| a > threshold).collect()
}
