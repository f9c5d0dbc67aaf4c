//! Closed-form moments of state-history rows, used as Monte Carlo oracles.
//!
//! All oracles use the trajectory convention of [`crate::lds`]: `y_j` collects
//! coordinate `j` of `x_0 = 0, x_1, ..., x_{N-1}`.

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

fn check_lambda(l: f64, open_zero: bool) -> Result<()> {
    let ok = if open_zero { l > 0.0 && l < 1.0 } else { l.abs() < 1.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::BadParameter(format!("lambda={l} out of range")))
    }
}

fn check_len(len: usize) -> Result<()> {
    if len >= 2 {
        Ok(())
    } else {
        Err(Error::BadParameter(format!("N={len} must be at least 2")))
    }
}

/// `Var(x_i)` for a scalar AR(1) coordinate with coefficient `l`.
fn ar_var(l: f64, i: usize) -> f64 {
    let q = l * l;
    if q == 0.0 {
        return if i == 0 { 0.0 } else { 1.0 };
    }
    (1.0 - q.powi(i as i32)) / (1.0 - q)
}

/// `sum_{h=1}^{count} r^h`.
fn geometric_tail(r: f64, count: usize) -> f64 {
    if count == 0 || r == 0.0 {
        return 0.0;
    }
    r * (1.0 - r.powi(count as i32)) / (1.0 - r)
}

/// `E ||y_k||^2` for a diagonal coordinate with eigenvalue `lambda`.
pub fn hermitian_row_mean(lambda: f64, len: usize) -> Result<f64> {
    check_lambda(lambda, false)?;
    check_len(len)?;
    Ok((1..len).map(|i| ar_var(lambda, i)).sum())
}

/// `Var ||y_k||^2`, including all cross-time covariances.
pub fn hermitian_row_variance(lambda: f64, len: usize) -> Result<f64> {
    check_lambda(lambda, false)?;
    check_len(len)?;
    let q = lambda * lambda;
    Ok(2.0
        * (1..len)
            .map(|i| ar_var(lambda, i).powi(2) * (1.0 + 2.0 * geometric_tail(q, len - 1 - i)))
            .sum::<f64>())
}

/// `E <y_k, y_j>` for two distinct diagonal coordinates; zero by independence.
pub fn hermitian_cross_mean(lambda: f64, rho: f64, len: usize) -> Result<f64> {
    check_lambda(lambda, false)?;
    check_lambda(rho, false)?;
    check_len(len)?;
    Ok(0.0)
}

/// `E <y_k, y_j>^2` for two distinct diagonal coordinates with eigenvalues
/// `lambda` and `rho`, including all cross-time terms.
pub fn hermitian_cross_second_moment(lambda: f64, rho: f64, len: usize) -> Result<f64> {
    check_lambda(lambda, false)?;
    check_lambda(rho, false)?;
    check_len(len)?;
    let r = lambda * rho;
    Ok((1..len)
        .map(|i| ar_var(lambda, i) * ar_var(rho, i) * (1.0 + 2.0 * geometric_tail(r, len - 1 - i)))
        .sum())
}

/// Equal-time part `sum_i Var(a_i) Var(b_i)` of [`hermitian_cross_second_moment`].
/// It coincides with the full moment only when `lambda * rho = 0`.
pub fn hermitian_cross_second_moment_lag0(lambda: f64, rho: f64, len: usize) -> Result<f64> {
    check_lambda(lambda, false)?;
    check_lambda(rho, false)?;
    check_len(len)?;
    Ok((1..len).map(|i| ar_var(lambda, i) * ar_var(rho, i)).sum())
}

fn binom_pow(k: usize, m: usize, ln_l: f64) -> f64 {
    (ln_binomial(k as u64, m as u64) + (k - m) as f64 * ln_l).exp()
}

/// `Var(x_i[j])` for a Jordan block `J_n(lambda)`, `j` 1-based.
pub fn swsscs_entry_variance_at(lambda: f64, n: usize, j: usize, i: usize) -> Result<f64> {
    check_lambda(lambda, true)?;
    if j == 0 || j > n {
        return Err(Error::IndexOutOfRange(format!("j={j} for n={n}")));
    }
    let ln_l = lambda.ln();
    let mut acc = 0.0;
    for t in 1..=i {
        let k = i - t;
        for m in 0..=k.min(n - j) {
            acc += binom_pow(k, m, ln_l).powi(2);
        }
    }
    Ok(acc)
}

/// `Var <y_j, e_{n-j+1}>`, the variance of the anti-diagonal entry `x_{n-j+1}[j]`:
/// `sum_{k=j}^{n} sum_{m=0}^{n-k} C(n-k, m)^2 lambda^{2(n-k-m)}`.
pub fn swsscs_entry_variance(lambda: f64, n: usize, j: usize) -> Result<f64> {
    check_lambda(lambda, true)?;
    if j == 0 || j > n {
        return Err(Error::IndexOutOfRange(format!("j={j} for n={n}")));
    }
    let ln_l = lambda.ln();
    Ok((j..=n)
        .map(|k| (0..=n - k).map(|m| binom_pow(n - k, m, ln_l).powi(2)).sum::<f64>())
        .sum())
}

/// Central-binomial (Stirling) estimates `4^n lambda^{2n} L` and `4^n lambda^{2n} U`
/// for [`swsscs_entry_variance`], with
/// `L = sum_{k=j}^n 1 / (4^k lambda^{2k} sqrt(pi (n-k+1/3)))` and `U` using `1/4`.
///
/// The lower value is a true bound. The upper value is not: it replaces
/// `lambda^{-2m}` by one inside the sum and falls below the variance once `n - j`
/// is moderate (see the tests).
pub fn stirling_bounds(lambda: f64, n: usize, j: usize) -> Result<(f64, f64)> {
    check_lambda(lambda, true)?;
    if j == 0 || j > n {
        return Err(Error::IndexOutOfRange(format!("j={j} for n={n}")));
    }
    let q = 4.0 * lambda * lambda;
    let pi = std::f64::consts::PI;
    let mut lo = 0.0;
    let mut hi = 0.0;
    for k in j..=n {
        let p = (n - k) as f64;
        let w = q.powi((n - k) as i32);
        lo += w / (pi * (p + 1.0 / 3.0)).sqrt();
        hi += w / (pi * (p + 0.25)).sqrt();
    }
    Ok((lo, hi))
}

/// `E <y_{n-1}, y_n>` for a Jordan block of size `n >= 2`:
/// `sum_{i=1}^{N-1} sum_{s=1}^{i-1} s lambda^{2s-1}`.
pub fn swsscs_adjacent_mean(lambda: f64, len: usize) -> Result<f64> {
    check_lambda(lambda, true)?;
    check_len(len)?;
    let q = lambda * lambda;
    let mut inner = 0.0;
    let mut pow = 1.0 / lambda;
    let mut total = 0.0;
    for i in 1..len {
        if i >= 2 {
            pow *= q;
            inner += (i - 1) as f64 * pow;
        }
        total += inner;
    }
    Ok(total)
}

/// The expression `lambda^-2 sum_{i=1}^{N-1} sum_{t=1}^{i-1} lambda^{4(i-t)}`, which
/// drops the factor `(i - t)` from the coupling term and so underestimates
/// [`swsscs_adjacent_mean`].
pub fn swsscs_adjacent_mean_printed(lambda: f64, len: usize) -> Result<f64> {
    check_lambda(lambda, true)?;
    check_len(len)?;
    let q2 = lambda.powi(4);
    Ok((1..len).map(|i| geometric_tail(q2, i - 1)).sum::<f64>() / (lambda * lambda))
}

/// Per-dimension growth exponent `ln(4 lambda^2)` of the anti-diagonal entry
/// variance estimate.
pub fn alpha_lambda(lambda: f64) -> Result<f64> {
    check_lambda(lambda, true)?;
    Ok((4.0 * lambda * lambda).ln())
}

/// `n (N - sum_{i=0}^{N-1} lambda^{2i}) / (1 - lambda^2)`, the scale of
/// `sigma_1(E X^T)^2` for a diagonal system with all eigenvalues equal to `lambda`.
pub fn hermitian_martingale_scale(lambda: f64, n: usize, len: usize) -> Result<f64> {
    check_lambda(lambda, false)?;
    check_len(len)?;
    let q = lambda * lambda;
    let geo: f64 = if q == 0.0 { 1.0 } else { (1.0 - q.powi(len as i32)) / (1.0 - q) };
    Ok(n as f64 * (len as f64 - geo) / (1.0 - q))
}

/// One row of the oracle table.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub name: &'static str,
    pub lambda: f64,
    pub rho: f64,
    pub n: usize,
    pub len: usize,
    pub value: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

/// Evaluates every oracle at one parameter point.
pub fn oracle_table(lambda: f64, rho: f64, n: usize, len: usize) -> Result<Vec<OracleRow>> {
    let row = |name, value: f64, lo: f64, hi: f64| OracleRow {
        name,
        lambda,
        rho,
        n,
        len,
        value,
        lower_bound: lo,
        upper_bound: hi,
    };
    let nan = f64::NAN;
    let (slo, shi) = stirling_bounds(lambda, n, 1)?;
    Ok(vec![
        row("hermitian_row_mean", hermitian_row_mean(lambda, len)?, nan, nan),
        row("hermitian_row_variance", hermitian_row_variance(lambda, len)?, nan, nan),
        row("hermitian_cross_mean", hermitian_cross_mean(lambda, rho, len)?, nan, nan),
        row("hermitian_cross_second_moment", hermitian_cross_second_moment(lambda, rho, len)?, nan, nan),
        row("swsscs_entry_variance", swsscs_entry_variance(lambda, n, 1)?, slo, shi),
        row("swsscs_adjacent_mean", swsscs_adjacent_mean(lambda, len)?, nan, nan),
        row("alpha_lambda", alpha_lambda(lambda)?, nan, nan),
        row("hermitian_martingale_scale", hermitian_martingale_scale(lambda, n, len)?, nan, nan),
    ])
}
