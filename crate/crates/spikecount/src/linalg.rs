//! Dense and structured symmetric eigenvalue routines.
//!
//! The dense path wraps nalgebra's symmetric eigensolver (values only, no
//! eigenvector accumulation). The structured path provides an O(n^2)
//! eigenvalue-only QL iteration for symmetric tridiagonal matrices plus a
//! secular-equation solver for rank-one updates of a diagonal matrix; the
//! simulation fast path is built from these two.

use nalgebra::DMatrix;

/// Eigenvalues of a symmetric matrix, descending. Values only; the
/// tridiagonalization never accumulates the orthogonal factor.
pub fn sym_eigenvalues_desc(s: &DMatrix<f64>) -> Vec<f64> {
    debug_assert_eq!(s.nrows(), s.ncols());
    let mut vals: Vec<f64> = s.clone().symmetric_eigenvalues().as_slice().to_vec();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}

/// Eigenvalues of a symmetric tridiagonal matrix, ascending.
///
/// `d` is the diagonal (length n), `e` the sub/super-diagonal (length n-1).
/// Implicit-shift QL without eigenvector accumulation; O(n) per eigenvalue,
/// O(n^2) overall.
pub fn tridiag_eigenvalues(mut d: Vec<f64>, mut e: Vec<f64>) -> Vec<f64> {
    let n = d.len();
    assert_eq!(e.len(), n.saturating_sub(1), "off-diagonal length mismatch");
    if n == 0 {
        return d;
    }
    e.push(0.0); // sentinel so e[m] is addressable for m = n-1

    for l in 0..n {
        let mut iter = 0;
        loop {
            // find the first negligible off-diagonal at or after l
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 60, "tridiagonal QL failed to converge");

            // implicit Wilkinson-style shift from the leading 2x2
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;

            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // underflow: split the block and restart this l
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // epilogue of a completed sweep
                if i == l {
                    d[l] -= p;
                    e[l] = g;
                    e[m] = 0.0;
                }
            }
        }
    }

    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d
}

/// Eigenvalues of `diag(d) + z z^T`, ascending.
///
/// `d` must be ascending. Poles that carry negligible weight or that
/// coincide within `8 eps * span` are deflated first; each remaining root is
/// bracketed by consecutive poles (interlacing) and found with safeguarded
/// Newton iteration on the secular function `f(x) = 1 + sum z_j^2/(d_j - x)`.
pub fn rank_one_update_eigs(d: &[f64], z: &[f64]) -> Vec<f64> {
    let n = d.len();
    assert_eq!(z.len(), n);
    if n == 0 {
        return Vec::new();
    }
    let rho: f64 = z.iter().map(|v| v * v).sum();
    if rho == 0.0 {
        return d.to_vec();
    }
    let span = (d[n - 1] - d[0]).abs().max(rho).max(1.0);
    let tol_pole = 8.0 * f64::EPSILON * span;
    let tol_w = f64::EPSILON * f64::EPSILON * rho;

    // Deflation: group coincident poles; a group of size m keeps m-1 copies
    // of its pole and contributes one effective pole with the summed weight.
    // Poles with negligible weight stay put unchanged.
    let mut fixed: Vec<f64> = Vec::new(); // eigenvalues decided by deflation
    let mut poles: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        let mut w = 0.0;
        while j < n && d[j] - d[i] <= tol_pole {
            w += z[j] * z[j];
            j += 1;
        }
        let group = j - i;
        if w <= tol_w {
            for _ in 0..group {
                fixed.push(d[i]);
            }
        } else {
            for _ in 0..group - 1 {
                fixed.push(d[i]);
            }
            poles.push(d[i]);
            weights.push(w);
        }
        i = j;
    }

    let k = poles.len();
    let mut roots = Vec::with_capacity(k);
    for r in 0..k {
        let lo = poles[r];
        let hi = if r + 1 < k {
            poles[r + 1]
        } else {
            poles[k - 1] + rho
        };
        roots.push(secular_root(&poles, &weights, lo, hi));
    }

    let mut out = fixed;
    out.extend(roots);
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Root of `1 + sum w_j/(poles_j - x)` in the open interval `(lo, hi)`,
/// where `lo` is a pole and `hi` is either the next pole or an upper bound
/// beyond the last one. The function increases from -inf to +inf (interior
/// intervals) or to a positive value (top interval), so the root exists and
/// is unique; Newton steps are clipped to a shrinking bisection bracket.
fn secular_root(poles: &[f64], weights: &[f64], lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    if width <= 0.0 {
        return lo;
    }
    let eval = |x: f64| -> (f64, f64) {
        let mut f = 1.0;
        let mut df = 0.0;
        for (&p, &w) in poles.iter().zip(weights) {
            let inv = 1.0 / (p - x);
            f += w * inv;
            df += w * inv * inv;
        }
        (f, df)
    };

    let mut a = lo + 1e-3 * width;
    let mut b = hi - 1e-3 * width;
    // widen inward until the bracket straddles the root
    for _ in 0..60 {
        if eval(a).0 < 0.0 || a - lo < f64::EPSILON * lo.abs().max(1.0) {
            break;
        }
        a = lo + (a - lo) * 0.25;
    }
    for _ in 0..60 {
        if eval(b).0 > 0.0 || hi - b < f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
        b = hi - (hi - b) * 0.25;
    }
    if eval(a).0 >= 0.0 {
        return a; // root squeezed against the lower pole
    }
    if eval(b).0 <= 0.0 {
        return b;
    }

    let mut x = 0.5 * (a + b);
    for _ in 0..100 {
        let (f, df) = eval(x);
        if f < 0.0 {
            a = x;
        } else {
            b = x;
        }
        if b - a <= 2.0 * f64::EPSILON * (a.abs().max(b.abs()).max(1.0)) {
            break;
        }
        let newton = x - f / df;
        x = if newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (b - a) / width < 1e-15 {
            break;
        }
    }
    x
}
