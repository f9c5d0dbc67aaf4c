//! Ordinary least-squares identification `A_hat = X_+ X_-^+` and bounds on its
//! Frobenius error.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lds::DataBundle;
use crate::linalg::{pinv_wide, row_distances, singular_values};
use crate::spectra::RANK_CUTOFF;

#[derive(Debug, Clone)]
pub struct OlsResult {
    pub a_hat: DMatrix<f64>,
    /// `||A - A_hat||_F`.
    pub error: f64,
    /// `||E X_-^+||_F`, equal to `error` whenever `X_-` has full row rank.
    pub noise_term: f64,
    /// `|error - noise_term| / error`.
    pub identity_residual: f64,
    pub rank: usize,
    pub degenerate: bool,
}

fn fit_parts(a: &DMatrix<f64>, xm: &DMatrix<f64>, xp: &DMatrix<f64>, e: &DMatrix<f64>) -> OlsResult {
    let (pinv, rank) = pinv_wide(xm, RANK_CUTOFF);
    let a_hat = xp * &pinv;
    let error = (a - &a_hat).norm();
    let noise_term = (e * &pinv).norm();
    let identity_residual = (error - noise_term).abs() / error.max(f64::MIN_POSITIVE);
    OlsResult { a_hat, error, noise_term, identity_residual, rank, degenerate: rank < xm.nrows() }
}

pub fn ols_fit(bundle: &DataBundle) -> OlsResult {
    fit_parts(bundle.spec.matrix(), &bundle.x_minus, &bundle.x_plus, &bundle.noise)
}

/// Deterministic and moment-based brackets around the OLS error.
#[derive(Debug, Clone, Copy)]
pub struct ErrorBounds {
    pub error: f64,
    /// `sigma_n(E X^T) sqrt(sum sigma_j^-4)`.
    pub lower_svd: f64,
    /// `sigma_1(E X^T) sqrt(sum sigma_j^-4)`.
    pub upper_svd: f64,
    /// `sqrt(sum 1 / (n sigma_j^2))`, a typical-size heuristic.
    pub lower_2mom: f64,
    /// `sqrt(sum n / sigma_j^2)`, a typical-size heuristic.
    pub upper_2mom: f64,
    /// `||E X^T||_F / sigma_1^2`.
    pub sandwich_lower: f64,
    /// `||E X^T||_F / sigma_n^2`.
    pub sandwich_upper: f64,
    /// `min(sqrt(sum n sigma_1^2 / sigma_j^4), (sum n^3 / sigma_j^4)^(1/4))`.
    pub combined_upper: f64,
    /// Condition number of `X X^T`.
    pub kappa: f64,
}

const BOUND_SLACK: f64 = 1e-8;

impl ErrorBounds {
    /// Whether both deterministic pairs bracket the error, with `1e-8` relative slack.
    pub fn deterministic_holds(&self) -> bool {
        self.svd_holds() && self.frobenius_holds()
    }

    pub fn svd_holds(&self) -> bool {
        let s = BOUND_SLACK * self.error;
        self.lower_svd <= self.error + s && self.error <= self.upper_svd + s
    }

    pub fn frobenius_holds(&self) -> bool {
        let s = BOUND_SLACK * self.error;
        self.sandwich_lower <= self.error + s && self.error <= self.sandwich_upper + s
    }

    /// `lower <= error <= combined_upper`; the combined bound is not guaranteed.
    pub fn combined_ordered(&self) -> bool {
        self.sandwich_lower <= self.error && self.error <= self.combined_upper
    }
}

pub fn error_bounds(bundle: &DataBundle) -> ErrorBounds {
    let fit = ols_fit(bundle);
    let sigma = singular_values(&bundle.x_minus);
    let n = sigma.len();
    let nf = n as f64;
    let m = &bundle.noise * bundle.x_minus.transpose();
    let ms = singular_values(&m);
    let inv4: f64 = sigma.iter().map(|s| s.powi(-4)).sum();
    let inv2: f64 = sigma.iter().map(|s| s.powi(-2)).sum();
    let (s1, sn) = (sigma[0], sigma[n - 1]);
    let mf = m.norm();
    ErrorBounds {
        error: fit.error,
        lower_svd: ms[n - 1] * inv4.sqrt(),
        upper_svd: ms[0] * inv4.sqrt(),
        lower_2mom: (inv2 / nf).sqrt(),
        upper_2mom: (inv2 * nf).sqrt(),
        sandwich_lower: mf / (s1 * s1),
        sandwich_upper: mf / (sn * sn),
        combined_upper: (nf * s1 * s1 * inv4).sqrt().min((nf.powi(3) * inv4).powf(0.25)),
        kappa: (s1 / sn).powi(2),
    }
}

/// Columns `c_k = X^T (X X^T)^-1 e_k` of the pseudo-inverse.
#[derive(Debug, Clone)]
pub struct ResidualColumns {
    pub c: DMatrix<f64>,
    pub norm_sq: Vec<f64>,
    pub inv_distance_sq: Vec<f64>,
    /// `max_k |d_k^2 ||c_k||^2 - 1|`.
    pub max_norm_gap: f64,
    /// `max |X c_k - e_k|` entrywise.
    pub max_identity_residual: f64,
}

pub fn residual_columns(bundle: &DataBundle) -> Result<ResidualColumns> {
    let x = &bundle.x_minus;
    let n = x.nrows();
    let (c, rank) = pinv_wide(x, RANK_CUTOFF);
    if rank < n {
        return Err(Error::SingularCovariance(f64::INFINITY));
    }
    let d = row_distances(x);
    let norm_sq: Vec<f64> = (0..n).map(|k| c.column(k).norm_squared()).collect();
    let inv_distance_sq: Vec<f64> = d.iter().map(|v| v.powi(-2)).collect();
    let max_norm_gap = (0..n).map(|k| (norm_sq[k] * d[k] * d[k] - 1.0).abs()).fold(0.0, f64::max);
    let max_identity_residual = (x * &c - DMatrix::<f64>::identity(n, n)).amax();
    Ok(ResidualColumns { c, norm_sq, inv_distance_sq, max_norm_gap, max_identity_residual })
}

#[derive(Debug, Clone, Copy)]
pub struct UnitaryCheck {
    pub original: f64,
    pub transformed: f64,
    pub relative_gap: f64,
}

/// Refits after the change of basis `x -> U x` and compares errors.
pub fn unitary_invariance_check(bundle: &DataBundle, u: &DMatrix<f64>) -> Result<UnitaryCheck> {
    let n = bundle.dim();
    if u.nrows() != n || u.ncols() != n {
        return Err(Error::BadParameter(format!("U must be {n}x{n}")));
    }
    let dev = (u.transpose() * u - DMatrix::<f64>::identity(n, n)).amax();
    if dev > 1e-12 {
        return Err(Error::NotOrthogonal(dev));
    }
    let original = ols_fit(bundle).error;
    let a = u * bundle.spec.matrix() * u.transpose();
    let t = fit_parts(&a, &(u * &bundle.x_minus), &(u * &bundle.x_plus), &(u * &bundle.noise));
    Ok(UnitaryCheck { original, transformed: t.error, relative_gap: (t.error - original).abs() / original })
}

/// Explicit lower and upper bound on the OLS error for a single Jordan block
/// `J_n(lambda)` observed over `len` steps.
pub fn sandwich_bound_swsscs(n: usize, len: usize, lambda: f64) -> Result<(f64, f64)> {
    if n == 0 || len <= n {
        return Err(Error::BadParameter(format!("need 0 < n < N, got n={n}, N={len}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::BadParameter(format!("lambda={lambda} outside (0,1)")));
    }
    let q = 4.0 * lambda * lambda;
    let (nf, lf) = (n as f64, len as f64);
    let mut lo = 0.0;
    let mut hi = 0.0;
    for i in 1..=n {
        let w = q.powi(i as i32 - n as i32);
        lo += w / (lf - nf + i as f64);
        hi += w * (nf - i as f64 + 1.0);
    }
    let lower = (lo / nf).sqrt() / (2.0 * lambda);
    let upper = (nf / (lf * q) * hi).sqrt();
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lds::{simulate, SystemSpec};
    use approx::assert_relative_eq;

    #[test]
    fn sandwich_collapses_at_n_one() {
        for &(len, l) in &[(10usize, 0.5), (2000, 0.92), (7, 0.1)] {
            let (lo, hi) = sandwich_bound_swsscs(1, len, l).unwrap();
            let v = 1.0 / (2.0 * l * (len as f64).sqrt());
            assert_relative_eq!(lo, v, max_relative = 1e-14);
            assert_relative_eq!(hi, v, max_relative = 1e-14);
        }
    }

    #[test]
    fn sandwich_matches_direct_formula() {
        let (n, len, l) = (10usize, 2000usize, 0.92f64);
        let p = |i: usize| 4f64.powi(i as i32) * l.powi(2 * i as i32);
        let lo_sum: f64 = (1..=n).map(|i| p(i) / (len - n + i) as f64).sum();
        let hi_sum: f64 = (1..=n).map(|i| p(i) * (n - i + 1) as f64).sum();
        let lo = 1.0 / (2.0 * l) * (1.0 / (p(n) * n as f64)).sqrt() * lo_sum.sqrt();
        let hi = (n as f64 / (len as f64 * p(n + 1))).sqrt() * hi_sum.sqrt();
        let (a, b) = sandwich_bound_swsscs(n, len, l).unwrap();
        assert_relative_eq!(a, lo, max_relative = 1e-12);
        assert_relative_eq!(b, hi, max_relative = 1e-12);
        assert!(a <= b);
    }

    #[test]
    fn sandwich_rejects_bad_input() {
        assert!(sandwich_bound_swsscs(3, 3, 0.5).is_err());
        assert!(sandwich_bound_swsscs(3, 30, 1.0).is_err());
        assert!(sandwich_bound_swsscs(0, 30, 0.5).is_err());
    }

    #[test]
    fn scalar_bounds_equal_error() {
        let b = simulate(&SystemSpec::hermitian(&[0.6]).unwrap(), 50, 3).unwrap();
        let eb = error_bounds(&b);
        for v in [eb.lower_svd, eb.upper_svd, eb.sandwich_lower, eb.sandwich_upper] {
            assert_relative_eq!(v, eb.error, max_relative = 1e-10);
        }
        let xe: f64 = b.noise.dot(&b.x_minus);
        assert_relative_eq!(eb.error, xe.abs() / b.x_minus.norm_squared(), max_relative = 1e-10);
    }

    #[test]
    fn identity_and_residual_columns() {
        let b = simulate(&SystemSpec::jordan(0.7, 4).unwrap(), 60, 5).unwrap();
        let f = ols_fit(&b);
        assert!(f.identity_residual < 1e-10);
        let r = residual_columns(&b).unwrap();
        assert!(r.max_norm_gap < 1e-9);
        assert!(r.max_identity_residual < 1e-10);
    }

    #[test]
    fn rejects_non_orthogonal() {
        let b = simulate(&SystemSpec::jordan(0.7, 2).unwrap(), 10, 5).unwrap();
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(unitary_invariance_check(&b, &u), Err(Error::NotOrthogonal(_))));
        let rot = DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
        assert!(unitary_invariance_check(&b, &rot).unwrap().relative_gap < 1e-10);
    }
}
