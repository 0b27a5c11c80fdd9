//! Tracy-Widom order-1 distribution: CDF and upper-tail quantiles from a
//! checked-in knot table with monotone piecewise-cubic interpolation.
//!
//! The sequential eigenvalue test only ever consumes quantiles s(gamma) with
//! F1(s) = 1 - gamma, so a table is sufficient; no Painleve II integration
//! happens at run time. The shipped table was generated offline by
//! high-precision integration of the Painleve II representation and each
//! knot is verified against independent reference values in the test suite.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Embedded default knot table, two columns "s F1(s)".
const EMBEDDED_TABLE: &str = include_str!("../data/tw1_cdf.tsv");

/// Knot table for the order-1 Tracy-Widom CDF with monotone cubic
/// interpolants in both directions (s -> F and F -> s).
#[derive(Debug, Clone)]
pub struct TW1Table {
    s: Vec<f64>,
    f: Vec<f64>,
    // Hermite slopes for the two interpolation directions
    dfds: Vec<f64>,
    dsdf: Vec<f64>,
}

impl TW1Table {
    /// Parses a table from text: two whitespace-separated columns
    /// "s F1(s)", '#' starts a comment, blank lines ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Vec::new();
        let mut f = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (a, b) = (it.next(), it.next());
            match (a, b) {
                (Some(a), Some(b)) => {
                    let sv: f64 = a.parse().map_err(|_| {
                        Error::BadTable(format!("line {}: bad s value {a:?}", lineno + 1))
                    })?;
                    let fv: f64 = b.parse().map_err(|_| {
                        Error::BadTable(format!("line {}: bad F value {b:?}", lineno + 1))
                    })?;
                    s.push(sv);
                    f.push(fv);
                }
                _ => {
                    return Err(Error::BadTable(format!(
                        "line {}: expected two columns",
                        lineno + 1
                    )))
                }
            }
        }
        Self::from_knots(s, f)
    }

    /// Builds a table from knot vectors, validating monotonicity and the
    /// probability coverage the estimators rely on.
    pub fn from_knots(s: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if s.len() != f.len() || s.len() < 4 {
            return Err(Error::BadTable(format!(
                "need at least 4 knots, got {}",
                s.len()
            )));
        }
        for i in 1..s.len() {
            if s[i] <= s[i - 1] {
                return Err(Error::BadTable(format!(
                    "s knots must be strictly increasing at index {i}"
                )));
            }
            if f[i] <= f[i - 1] {
                return Err(Error::BadTable(format!(
                    "F knots must be strictly increasing at index {i}"
                )));
            }
        }
        let (fmin, fmax) = (f[0], f[f.len() - 1]);
        if !(0.0..1.0).contains(&fmin) || !(0.0..=1.0).contains(&fmax) {
            return Err(Error::BadTable("F values must lie in [0, 1)".into()));
        }
        // coverage needed for cdf probabilities [0.005, 0.999] and
        // quantile arguments gamma in [0.001, 0.5]
        if fmin > 0.005 || fmax < 0.999 {
            return Err(Error::BadTable(format!(
                "table must cover probabilities [0.005, 0.999], covers [{fmin}, {fmax}]"
            )));
        }
        let dfds = pchip_slopes(&s, &f);
        let dsdf = pchip_slopes(&f, &s);
        Ok(Self { s, f, dfds, dsdf })
    }

    /// The process-wide default table.
    pub fn embedded() -> &'static TW1Table {
        static TABLE: OnceLock<TW1Table> = OnceLock::new();
        TABLE.get_or_init(|| {
            TW1Table::parse(EMBEDDED_TABLE).expect("embedded TW1 table must parse")
        })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.s.iter().copied().zip(self.f.iter().copied())
    }

    /// Upper-tail quantile: the s with `F1(s) = 1 - gamma`.
    ///
    /// `gamma` must lie in (0, 0.5] and within the table's coverage.
    pub fn quantile(&self, gamma: f64) -> Result<f64> {
        let fmax = *self.f.last().unwrap();
        let min_gamma = 1.0 - fmax;
        if !gamma.is_finite() || gamma <= 0.0 || gamma > 0.5 || gamma < min_gamma {
            return Err(Error::TableRange {
                gamma,
                min_gamma,
                max_gamma: 0.5,
            });
        }
        let target = 1.0 - gamma;
        Ok(pchip_eval(&self.f, &self.s, &self.dsdf, target))
    }

    /// CDF value `F1(s)`, saturating at the endpoint knots outside the
    /// tabulated range.
    pub fn cdf(&self, s: f64) -> f64 {
        if s <= self.s[0] {
            return self.f[0];
        }
        if s >= *self.s.last().unwrap() {
            return *self.f.last().unwrap();
        }
        pchip_eval(&self.s, &self.f, &self.dfds, s)
    }
}

/// Quantile of the order-1 Tracy-Widom law from the embedded table.
pub fn tw1_quantile(gamma: f64) -> Result<f64> {
    TW1Table::embedded().quantile(gamma)
}

/// CDF of the order-1 Tracy-Widom law from the embedded table.
pub fn tw1_cdf(s: f64) -> f64 {
    TW1Table::embedded().cdf(s)
}

/// Monotone cubic Hermite slopes (Fritsch-Carlson limiting). Keeps the
/// interpolant inside the knot range: no overshoot between knots.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];

    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
        // opposite signs or a flat segment: keep slope 0 for monotonicity
    }
    d[0] = endpoint_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = endpoint_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// One-sided three-point endpoint slope with the standard monotonicity clamp.
fn endpoint_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        d = 0.0;
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        d = 3.0 * d0;
    }
    d
}

/// Cubic Hermite evaluation at `q` over knots `(x, y)` with slopes `d`.
/// `x` must be strictly increasing and `q` inside the knot range.
fn pchip_eval(x: &[f64], y: &[f64], d: &[f64], q: f64) -> f64 {
    let i = match x.binary_search_by(|v| v.partial_cmp(&q).unwrap()) {
        Ok(i) => return y[i],
        Err(i) => i.clamp(1, x.len() - 1) - 1,
    };
    let h = x[i + 1] - x[i];
    let t = (q - x[i]) / h;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1]
}
