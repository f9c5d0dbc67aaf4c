//! Spectral structure of the sample covariance `Sigma = X X^T` of a state
//! history: eigenvalues, row distances, Gershgorin discs, interlacing and the
//! precision matrix.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};
use crate::linalg::{row_distances, singular_values, sym_eigenvalues_desc, thin_svd, ThinSvd};

/// Relative singular-value cutoff used for rank decisions.
pub const RANK_CUTOFF: f64 = 1e-12;

pub fn sample_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    x * x.transpose()
}

/// Eigenvalues, singular values and row distances of a state history.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Eigenvalues of `X X^T`, non-increasing.
    pub eigenvalues: DVector<f64>,
    /// Singular values of `X`, non-increasing.
    pub singular_values: DVector<f64>,
    pub row_norms_sq: DVector<f64>,
    /// Distance of each row to the span of the others; entries below the rank
    /// cutoff are reported as zero.
    pub distances: DVector<f64>,
    pub rank: usize,
    pub degenerate: bool,
}

pub fn spectrum(x: &DMatrix<f64>) -> Spectrum {
    let sigma = singular_values(x);
    let s1 = sigma[0];
    let rank = sigma.iter().filter(|&&s| s > RANK_CUTOFF * s1 && s > 0.0).count();
    let degenerate = rank < x.nrows();
    let scale = (0..x.nrows()).map(|j| x.row(j).norm()).fold(0.0f64, f64::max);
    let mut distances = row_distances(x);
    if degenerate {
        distances.iter_mut().filter(|d| **d <= RANK_CUTOFF * scale).for_each(|d| *d = 0.0);
    }
    Spectrum {
        eigenvalues: sym_eigenvalues_desc(&sample_covariance(x)),
        singular_values: sigma,
        row_norms_sq: DVector::from_fn(x.nrows(), |j, _| x.row(j).norm_squared()),
        distances,
        rank,
        degenerate,
    }
}

/// Upper-triangular `R` with `X X^T = R^T R`, from a QR factorisation of `X^T`.
fn covariance_factor(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.transpose().qr().r()
}

fn kappa_from(sigma: &DVector<f64>) -> f64 {
    let s = sigma[0] / sigma[sigma.len() - 1];
    s * s
}

/// The three evaluations of the negative second moment of `X`.
#[derive(Debug, Clone, Copy)]
pub struct NegativeSecondMoment {
    /// `sum_j sigma_j^-2`.
    pub via_singular_values: f64,
    /// `trace((X X^T)^-1)`, from triangular solves with the covariance factor.
    pub via_trace: f64,
    /// `sum_j d_j^-2`.
    pub via_distances: f64,
}

impl NegativeSecondMoment {
    pub fn max_relative_gap(&self) -> f64 {
        let v = [self.via_singular_values, self.via_trace, self.via_distances];
        let hi = v.iter().copied().fold(f64::MIN, f64::max);
        let lo = v.iter().copied().fold(f64::MAX, f64::min);
        (hi - lo) / hi.abs()
    }
}

pub fn negative_second_moment(x: &DMatrix<f64>) -> Result<NegativeSecondMoment> {
    let sp = spectrum(x);
    if sp.degenerate {
        return Err(Error::SingularCovariance(f64::INFINITY));
    }
    let n = x.nrows();
    let r = covariance_factor(x);
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::SingularCovariance(f64::INFINITY))?;
    Ok(NegativeSecondMoment {
        via_singular_values: sp.singular_values.iter().map(|s| s.powi(-2)).sum(),
        via_trace: rinv.norm_squared(),
        via_distances: sp.distances.iter().map(|d| d.powi(-2)).sum(),
    })
}

/// Gershgorin discs of a symmetric matrix and whether its spectrum lies in them.
#[derive(Debug, Clone)]
pub struct Gershgorin {
    pub centers: DVector<f64>,
    pub radii: DVector<f64>,
    pub eigenvalues: DVector<f64>,
    pub contained: bool,
    pub max_radius_to_center: f64,
}

pub fn gershgorin(s: &DMatrix<f64>) -> Gershgorin {
    let n = s.nrows();
    let centers = s.diagonal();
    let radii = DVector::from_fn(n, |i, _| (0..n).filter(|&j| j != i).map(|j| s[(i, j)].abs()).sum());
    let eigenvalues = sym_eigenvalues_desc(s);
    let slack = 1e-10 * eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let contained = eigenvalues
        .iter()
        .all(|&l| (0..n).any(|i| (l - centers[i]).abs() <= radii[i] + slack));
    let max_radius_to_center = (0..n).map(|i| radii[i] / centers[i].abs()).fold(0.0f64, f64::max);
    Gershgorin { centers, radii, eigenvalues, contained, max_radius_to_center }
}

/// Cauchy interlacing between `Sigma` and the submatrix with its first `k` rows
/// and columns removed.
#[derive(Debug, Clone, Copy)]
pub struct Interlacing {
    pub k: usize,
    pub holds: bool,
    /// Smallest slack over both inequalities; negative means a violation.
    pub min_margin: f64,
}

pub fn interlacing_check(s: &DMatrix<f64>, k: usize) -> Result<Interlacing> {
    let n = s.nrows();
    if k >= n {
        return Err(Error::IndexOutOfRange(format!("k={k} must be below n={n}")));
    }
    let full = sym_eigenvalues_desc(s);
    let sub = sym_eigenvalues_desc(&s.view((k, k), (n - k, n - k)).into_owned());
    let mut margin = f64::INFINITY;
    for i in 0..n - k {
        margin = margin.min(full[i] - sub[i]).min(sub[i] - full[i + k]);
    }
    let tol = -1e-8 * full[0].abs();
    Ok(Interlacing { k, holds: margin >= tol, min_margin: margin })
}

/// Margin of `||y_n||^2 - lambda_n(Sigma)`; non-negative up to roundoff.
pub fn last_row_margin(s: &DMatrix<f64>) -> f64 {
    let n = s.nrows();
    s[(n - 1, n - 1)] - sym_eigenvalues_desc(s)[n - 1]
}

/// Precision matrix `V = Sigma^-1` and the linear constraints it satisfies with
/// the Gram entries `<y_k, y_l>`.
#[derive(Debug, Clone)]
pub struct PrecisionReport {
    pub v: DMatrix<f64>,
    /// `|sum_{k != j} v_jk <y_k, y_j> - (1 - v_jj ||y_j||^2)|`.
    pub residual_lin1: DVector<f64>,
    /// `max_{l != j} |sum_k v_jk <y_k, y_l>|`.
    pub max_residual_lin2: DVector<f64>,
    /// `|v_jj d_j^2 - 1|`.
    pub diag_vs_distance: DVector<f64>,
    /// `sum_{k != j} v_jk <y_k, y_j>`, which is never positive.
    pub sign_sums: DVector<f64>,
    pub kappa: f64,
    pub tol: f64,
    pub holds: bool,
    pub sign_holds: bool,
}

pub const SIGN_TOL: f64 = 1e-10;

pub fn precision_constraints(x: &DMatrix<f64>) -> Result<PrecisionReport> {
    let n = x.nrows();
    let sigma = singular_values(x);
    let kappa = kappa_from(&sigma);
    if !(sigma[n - 1] > RANK_CUTOFF * sigma[0]) {
        return Err(Error::SingularCovariance(kappa));
    }
    let g = sample_covariance(x);
    let r = covariance_factor(x);
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::SingularCovariance(kappa))?;
    let v = &rinv * rinv.transpose();
    let d = row_distances(x);
    let tol = 1e-7 * kappa;
    let mut residual_lin1 = DVector::zeros(n);
    let mut max_residual_lin2 = DVector::zeros(n);
    let mut diag_vs_distance = DVector::zeros(n);
    let mut sign_sums = DVector::zeros(n);
    for j in 0..n {
        let off: f64 = (0..n).filter(|&k| k != j).map(|k| v[(j, k)] * g[(k, j)]).sum();
        sign_sums[j] = off;
        residual_lin1[j] = (off - (1.0 - v[(j, j)] * g[(j, j)])).abs();
        max_residual_lin2[j] = (0..n)
            .filter(|&l| l != j)
            .map(|l| (0..n).map(|k| v[(j, k)] * g[(k, l)]).sum::<f64>().abs())
            .fold(0.0, f64::max);
        diag_vs_distance[j] = (v[(j, j)] * d[j] * d[j] - 1.0).abs();
    }
    let holds = residual_lin1.max() <= tol && max_residual_lin2.max() <= tol && diag_vs_distance.max() <= tol;
    let sign_holds = sign_sums.max() <= SIGN_TOL;
    Ok(PrecisionReport {
        v,
        residual_lin1,
        max_residual_lin2,
        diag_vs_distance,
        sign_sums,
        kappa,
        tol,
        holds,
        sign_holds,
    })
}

/// Closed-form inverse of a symmetric positive definite 2x2 Gram matrix.
pub fn solve_precision_2d(g: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let (a, c, b) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
    let det = a * b - c * c;
    if !(det > 1e-14 * a.abs() * b.abs()) || !det.is_finite() {
        return Err(Error::SingularGram);
    }
    Ok(Matrix2::new(b / det, -c / det, -c / det, a / det))
}

/// Thin SVD `X = U Sigma V^T` with `v_i = X^T u_i / sigma_i`.
pub fn svd_factorization(x: &DMatrix<f64>) -> ThinSvd {
    thin_svd(x)
}

/// Singular-value summary of the noise/state cross matrix `E X^T`.
#[derive(Debug, Clone, Copy)]
pub struct MartingaleStats {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub frobenius: f64,
    /// `sigma_1(E) sigma_1(X)`, an upper bound on `sigma_max`.
    pub product_bound: f64,
    /// `sigma_max / (sqrt(n) sigma_1(X))`.
    pub normalized: f64,
}

pub fn martingale_stats(e: &DMatrix<f64>, x: &DMatrix<f64>) -> MartingaleStats {
    let m = e * x.transpose();
    let s = singular_values(&m);
    let sx = singular_values(x)[0];
    let se = singular_values(e)[0];
    MartingaleStats {
        sigma_max: s[0],
        sigma_min: s[s.len() - 1],
        frobenius: m.norm(),
        product_bound: se * sx,
        normalized: s[0] / ((x.nrows() as f64).sqrt() * sx),
    }
}

/// One row of the per-coordinate spectrum table.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumRow {
    pub j: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub distance: f64,
    pub v_jj: f64,
    pub residual_lin1: f64,
    pub max_residual_lin2: f64,
}

pub fn spectrum_table(x: &DMatrix<f64>) -> Result<Vec<SpectrumRow>> {
    let sp = spectrum(x);
    let pr = precision_constraints(x)?;
    Ok((0..x.nrows())
        .map(|j| SpectrumRow {
            j: j + 1,
            sigma: sp.singular_values[j],
            lambda: sp.eigenvalues[j],
            distance: sp.distances[j],
            v_jj: pr.v[(j, j)],
            residual_lin1: pr.residual_lin1[j],
            max_residual_lin2: pr.max_residual_lin2[j],
        })
        .collect())
}
