//! Ratio `||X_-||_F / ||E||_F` between state and noise energy, its growth with
//! dimension, and the gain of the noise-to-state map.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lds::{DataBundle, SystemSpec};
use crate::linalg::singular_values;
use crate::mc::{map_trials, median, quantile_sorted};
use crate::noise::{derive_seed, noise_matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TalagrandRatio {
    pub ratio: f64,
    /// `sigma_1(X_-) / sigma_n(E)`, a deterministic upper bound on `ratio`.
    pub bound: f64,
    pub zero_noise: bool,
}

pub fn talagrand_ratio(bundle: &DataBundle) -> TalagrandRatio {
    let e = bundle.noise.norm();
    if e == 0.0 {
        return TalagrandRatio { ratio: f64::NAN, bound: f64::NAN, zero_noise: true };
    }
    let se = singular_values(&bundle.noise);
    let bound = singular_values(&bundle.x_minus)[0] / se[se.len() - 1];
    TalagrandRatio { ratio: bundle.x_minus.norm() / e, bound, zero_noise: false }
}

/// Default cap on `N n` for [`frobenius_closed_form`].
pub const FROBENIUS_CAP: usize = 512;

/// `||X_-||_F^2` for a Jordan block `J_n(lambda)` evaluated term by term from
/// the noise: `sum_i sum_j sum_{t,s <= i} sum_{m,m'} c(i-t,m) c(i-s,m') w_{t-1}[j+m] w_{s-1}[j+m']`
/// with `c(k,m) = C(k,m) lambda^{k-m}`.
pub fn frobenius_closed_form(lambda: f64, noise: &DMatrix<f64>, cap: usize) -> Result<f64> {
    let (n, len) = noise.shape();
    if n * len > cap {
        return Err(Error::TooLarge(format!("N*n = {} exceeds cap {cap}", n * len)));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::BadParameter(format!("lambda={lambda} outside (0,1)")));
    }
    let mut c = vec![vec![0.0; n]; len];
    for (k, row) in c.iter_mut().enumerate() {
        for (m, v) in row.iter_mut().enumerate().take(k + 1) {
            *v = statrs::function::factorial::binomial(k as u64, m as u64) * lambda.powi((k - m) as i32);
        }
    }
    let mut total = 0.0;
    for i in 1..len {
        for j in 0..n {
            let mmax = n - 1 - j;
            for t in 1..=i {
                for s in 1..=i {
                    for m in 0..=mmax.min(i - t) {
                        let a = c[i - t][m] * noise[(j + m, t - 1)];
                        for mp in 0..=mmax.min(i - s) {
                            total += a * c[i - s][mp] * noise[(j + mp, s - 1)];
                        }
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Operator 2-norm of the linear map `E -> X_-` over `len` steps, by power
/// iteration on its normal operator. Deterministic for a given `seed`.
pub fn noise_map_operator_norm(spec: &SystemSpec, len: usize, iters: usize, seed: u64) -> f64 {
    let a = spec.matrix();
    let at = a.transpose();
    let n = spec.dim();
    let forward = |w: &DMatrix<f64>| {
        let mut x = DMatrix::zeros(n, len);
        let mut cur = DVector::zeros(n);
        for t in 1..len {
            cur = a * &cur + w.column(t - 1);
            x.set_column(t, &cur);
        }
        x
    };
    let adjoint = |g: &DMatrix<f64>| {
        let mut w = DMatrix::zeros(n, len);
        let mut p = DVector::zeros(n);
        for t in (1..len).rev() {
            p = &at * &p + g.column(t);
            w.set_column(t - 1, &p);
        }
        w
    };
    let mut w = noise_matrix(seed, 0, n, len);
    w /= w.norm();
    let mut est = 0.0;
    for _ in 0..iters {
        let x = forward(&w);
        est = x.norm();
        if est == 0.0 {
            return 0.0;
        }
        let back = adjoint(&x);
        let nb = back.norm();
        w = back / nb;
    }
    est
}

/// System family used when sweeping the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `J_n(lambda)`.
    Jordan,
    /// `lambda I_n`.
    Hermitian,
}

impl Family {
    pub fn spec(self, lambda: f64, n: usize) -> Result<SystemSpec> {
        match self {
            Family::Jordan => SystemSpec::jordan(lambda, n),
            Family::Hermitian => SystemSpec::hermitian(&vec![lambda; n]),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "jordan" => Ok(Family::Jordan),
            "hermitian" => Ok(Family::Hermitian),
            _ => Err(Error::BadParameter(format!("unknown family {s}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScalingPoint {
    pub n: usize,
    pub ratios: Vec<f64>,
    pub median_ratio: f64,
    pub q99: f64,
    pub log_median: f64,
}

#[derive(Debug, Clone)]
pub struct ScalingStudy {
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of `ln median ratio` against `n`.
    pub slope: f64,
    /// Percentile bootstrap 95% interval for the slope.
    pub ci: (f64, f64),
}

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Median ratio per dimension and the exponential growth rate across dimensions.
pub fn scaling_study(
    family: Family,
    lambda: f64,
    n_list: &[usize],
    len: usize,
    trials: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<ScalingStudy> {
    let mut dims: Vec<usize> = n_list.to_vec();
    dims.sort_unstable();
    dims.dedup();
    if dims.len() < 2 {
        return Err(Error::InsufficientPoints(dims.len()));
    }
    if trials == 0 {
        return Err(Error::BadParameter("trials must be positive".into()));
    }
    let mut points = Vec::with_capacity(dims.len());
    for &n in &dims {
        let spec = family.spec(lambda, n)?;
        let ratios = map_trials(&spec, len, trials, seed, threads, |b| talagrand_ratio(b).ratio)?;
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        let median_ratio = quantile_sorted(&sorted, 0.5);
        points.push(ScalingPoint {
            n,
            q99: quantile_sorted(&sorted, 0.99),
            log_median: median_ratio.ln(),
            median_ratio,
            ratios,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.log_median).collect();
    let slope = ls_slope(&xs, &ys);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xb007));
    let mut boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut buf = Vec::with_capacity(trials);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let ys: Vec<f64> = points
            .iter()
            .map(|p| {
                buf.clear();
                buf.extend((0..p.ratios.len()).map(|_| p.ratios[rng.random_range(0..p.ratios.len())]));
                median(&buf).ln()
            })
            .collect();
        boot.push(ls_slope(&xs, &ys));
    }
    boot.sort_by(f64::total_cmp);
    let ci = (quantile_sorted(&boot, 0.025), quantile_sorted(&boot, 0.975));
    Ok(ScalingStudy { points, slope, ci })
}
