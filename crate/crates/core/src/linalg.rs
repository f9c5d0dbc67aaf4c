//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Thin SVD `X = U diag(sigma) V^T` of a matrix with at least as many columns as rows.
/// Singular values are in non-increasing order.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

fn sorted_svd(m: DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let svd = m.svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let u = DMatrix::from_fn(u.nrows(), order.len(), |i, k| u[(i, order[k])]);
    let v = DMatrix::from_fn(vt.ncols(), order.len(), |i, k| vt[(order[k], i)]);
    let s = DVector::from_iterator(order.len(), order.iter().map(|&k| s[k]));
    (u, s, v)
}

/// Thin SVD of a wide (or square) matrix, computed through a QR of its transpose.
pub fn thin_svd(x: &DMatrix<f64>) -> ThinSvd {
    assert!(x.nrows() <= x.ncols(), "thin_svd expects rows <= cols");
    let qr = x.transpose().qr();
    let q = qr.q();
    let r = qr.r();
    let (ur, sigma, vr) = sorted_svd(r);
    ThinSvd { u: vr, sigma, v: q * ur }
}

/// Singular values in non-increasing order.
pub fn singular_values(x: &DMatrix<f64>) -> DVector<f64> {
    let r = if x.nrows() <= x.ncols() {
        x.transpose().qr().r()
    } else {
        x.clone().qr().r()
    };
    let mut s: Vec<f64> = r.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    DVector::from_vec(s)
}

/// Eigenvalues of a symmetric matrix in non-increasing order.
pub fn sym_eigenvalues_desc(s: &DMatrix<f64>) -> DVector<f64> {
    let mut ev: Vec<f64> = s.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    DVector::from_vec(ev)
}

/// Euclidean distance from each row of `x` to the span of the other rows.
pub fn row_distances(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows();
    let len = x.ncols();
    DVector::from_fn(n, |j, _| {
        if n == 1 {
            return x.row(0).norm();
        }
        let mut m = DMatrix::zeros(len, n);
        let mut c = 0;
        for k in (0..n).filter(|&k| k != j) {
            m.set_column(c, &x.row(k).transpose());
            c += 1;
        }
        m.set_column(n - 1, &x.row(j).transpose());
        let r = m.qr().r();
        r[(n - 1, n - 1)].abs()
    })
}

/// Moore-Penrose pseudo-inverse of a wide matrix with relative cutoff on singular values.
/// Returns the pseudo-inverse and the numerical rank.
pub fn pinv_wide(x: &DMatrix<f64>, rel_cutoff: f64) -> (DMatrix<f64>, usize) {
    let svd = thin_svd(x);
    let s1 = svd.sigma.get(0).copied().unwrap_or(0.0);
    let cut = rel_cutoff * s1;
    let mut scaled = svd.v.clone();
    let mut rank = 0;
    for k in 0..svd.sigma.len() {
        let s = svd.sigma[k];
        if s > cut && s > 0.0 {
            rank += 1;
            scaled.column_mut(k).scale_mut(1.0 / s);
        } else {
            scaled.column_mut(k).fill(0.0);
        }
    }
    (scaled * svd.u.transpose(), rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 5, &[
            1.0, 2.0, 0.5, -1.0, 3.0,
            0.0, 1.0, 4.0, 2.0, -2.0,
            2.5, -0.5, 1.0, 1.0, 0.0,
        ])
    }

    #[test]
    fn thin_svd_reconstructs() {
        let x = sample();
        let s = thin_svd(&x);
        let rec = &s.u * DMatrix::from_diagonal(&s.sigma) * s.v.transpose();
        assert_relative_eq!(rec, x, epsilon = 1e-12);
        assert!(s.sigma[0] >= s.sigma[1] && s.sigma[1] >= s.sigma[2]);
        assert_relative_eq!(s.v.transpose() * &s.v, DMatrix::identity(3, 3), epsilon = 1e-12);
    }

    #[test]
    fn singular_values_match_eigenvalues_of_gram() {
        let x = sample();
        let s = singular_values(&x);
        let ev = sym_eigenvalues_desc(&(&x * x.transpose()));
        for k in 0..3 {
            assert_relative_eq!(s[k] * s[k], ev[k], max_relative = 1e-10);
        }
    }

    #[test]
    fn distances_of_orthogonal_rows_are_norms() {
        let x = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        let d = row_distances(&x);
        assert_relative_eq!(d[0], 3.0, epsilon = 1e-14);
        assert_relative_eq!(d[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn pinv_is_right_inverse() {
        let x = sample();
        let (p, rank) = pinv_wide(&x, 1e-12);
        assert_eq!(rank, 3);
        assert_relative_eq!(&x * p, DMatrix::identity(3, 3), epsilon = 1e-12);
    }
}
