//! Moment oracles against independent matrix-power sums and Monte Carlo.

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use olsid_core::lds::{stationary_covariance, SystemSpec};
use olsid_core::mc::{compare_to_oracle, map_trials, run_trials, summarize, Registry, TrialPlan};
use olsid_core::moments::*;
use proptest::prelude::*;

/// `Cov(x_i, x_k)` for `i <= k` from matrix powers: `sum_t A^{i-t} (A^{k-t})^T`.
fn state_cov(a: &DMatrix<f64>, i: usize, k: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut acc = DMatrix::zeros(n, n);
    for t in 1..=i {
        acc += a.pow((i - t) as u32) * a.pow((k - t) as u32).transpose();
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn row_mean_matches_double_sum(l in -0.99f64..0.99, len in 2usize..200) {
        let direct: f64 = (1..len).map(|i| (1..=i).map(|t| l.powi(2 * (i - t) as i32)).sum::<f64>()).sum();
        let v = hermitian_row_mean(l, len).unwrap();
        prop_assert!((v - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn cross_moment_matches_lag_sum(l in -0.95f64..0.95, r in -0.95f64..0.95, len in 2usize..40) {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![l, r]));
        let mut direct = 0.0;
        let mut var = 0.0;
        for i in 1..len {
            for k in 1..len {
                let c = if i <= k { state_cov(&a, i, k) } else { state_cov(&a, k, i).transpose() };
                direct += c[(0, 0)] * c[(1, 1)];
                var += 2.0 * c[(0, 0)].powi(2);
            }
        }
        prop_assert!((hermitian_cross_second_moment(l, r, len).unwrap() - direct).abs() <= 1e-10 * direct);
        prop_assert!((hermitian_row_variance(l, len).unwrap() - var).abs() <= 1e-10 * var);
    }

    #[test]
    fn entry_variance_matches_matrix_powers(l in 0.05f64..0.99, n in 1usize..9, jj in 0usize..8) {
        let j = 1 + jj % n;
        let a = SystemSpec::jordan(l, n).unwrap().matrix().clone();
        let i = n - j + 1;
        let direct = state_cov(&a, i, i)[(j - 1, j - 1)];
        let v = swsscs_entry_variance(l, n, j).unwrap();
        prop_assert!((v - direct).abs() <= 1e-10 * direct);
        if j < n {
            prop_assert!(v >= swsscs_entry_variance(l, n, j + 1).unwrap());
        }
    }

    #[test]
    fn adjacent_mean_matches_matrix_powers(l in 0.05f64..0.99, n in 2usize..5, len in 2usize..40) {
        let a = SystemSpec::jordan(l, n).unwrap().matrix().clone();
        let direct: f64 = (1..len).map(|i| state_cov(&a, i, i)[(n - 2, n - 1)]).sum();
        let v = swsscs_adjacent_mean(l, len).unwrap();
        prop_assert!((v - direct).abs() <= 1e-10 * direct.abs().max(1e-300));
    }

    #[test]
    fn martingale_scale_is_n_times_row_mean(l in -0.99f64..0.99, n in 1usize..10, len in 2usize..500) {
        let s = hermitian_martingale_scale(l, n, len).unwrap();
        let m = n as f64 * hermitian_row_mean(l, len).unwrap();
        prop_assert!((s - m).abs() <= 1e-10 * m);
    }
}

#[test]
fn entry_variance_growth_between_dimensions() {
    let l: f64 = 0.95;
    let q = 4.0 * l * l;
    let r = swsscs_entry_variance(l, 13, 1).unwrap() / swsscs_entry_variance(l, 12, 1).unwrap();
    let eps = (1.0 - r / q).max(0.0);
    assert!(r > q * (1.0 - eps) && eps == 0.0, "ratio {r} vs 4 lambda^2 = {q}");
}

#[test]
fn stirling_lower_bound_holds_on_grid() {
    for &l in &[0.55, 0.75, 0.95] {
        for n in 2..=20 {
            let exact = swsscs_entry_variance(l, n, 1).unwrap();
            let (lo, _) = stirling_bounds(l, n, 1).unwrap();
            assert!(lo <= exact, "lambda={l} n={n}: {lo} > {exact}");
        }
    }
}

/// The upper estimate replaces `lambda^{-2m}` by one, so the exact variance
/// exceeds it by roughly `((1 + lambda) / (2 lambda))^{2n}`. On the grid it
/// only survives at `lambda = 0.95, n = 2`.
#[test]
fn stirling_upper_estimate_is_not_a_bound() {
    let mut held = Vec::new();
    for &l in &[0.55, 0.75, 0.95] {
        for n in 2..=20 {
            let (_, hi) = stirling_bounds(l, n, 1).unwrap();
            if swsscs_entry_variance(l, n, 1).unwrap() <= hi {
                held.push((l, n));
            }
        }
    }
    assert_eq!(held, vec![(0.95, 2)]);
}

#[test]
fn row_mean_approaches_stationary_variance() {
    let l: f64 = 0.7;
    let len = 5000;
    let spec = SystemSpec::hermitian(&[l]).unwrap();
    let p = stationary_covariance(&spec).unwrap().p[(0, 0)];
    assert_relative_eq!(hermitian_row_mean(l, len).unwrap() / len as f64, p, max_relative = 1e-3);
}

fn mc_gate(spec: SystemSpec, len: usize, trials: usize, seed: u64, oracle: f64, f: impl Fn(&olsid_core::lds::DataBundle) -> f64 + Sync + Send) {
    let values = map_trials(&spec, len, trials, seed, None, f).unwrap();
    let est = summarize(values, seed);
    let c = compare_to_oracle(&est, oracle, 3.0);
    assert!(c.pass, "mean {} oracle {} z {}", est.mean, oracle, c.z_score);
}

#[test]
fn mc_row_mean_and_variance() {
    let (l, len) = (0.8, 300);
    let reg = Registry::builtin();
    let plan = TrialPlan {
        spec: SystemSpec::hermitian(&[l]).unwrap(),
        len,
        trials: 400,
        base_seed: 3,
        statistic: "row1_sq_norm".into(),
    };
    let est = run_trials(&plan, &reg).unwrap();
    assert!(compare_to_oracle(&est, hermitian_row_mean(l, len).unwrap(), 3.0).pass);
    let var = hermitian_row_variance(l, len).unwrap();
    let ratio = est.std.powi(2) / var;
    assert!((0.8..1.25).contains(&ratio), "variance ratio {ratio}");
}

#[test]
fn mc_cross_second_moment_includes_lag_terms() {
    let (l, r, len) = (0.8, 0.6, 1000);
    let spec = SystemSpec::hermitian(&[l, r]).unwrap();
    let inner = |b: &olsid_core::lds::DataBundle| b.x_minus.row(0).dot(&b.x_minus.row(1));
    mc_gate(spec.clone(), len, 400, 5, 0.0, inner);
    let full = hermitian_cross_second_moment(l, r, len).unwrap();
    mc_gate(spec.clone(), len, 400, 6, full, move |b| inner(b).powi(2));
    let values = map_trials(&spec, len, 400, 6, None, move |b| inner(b).powi(2)).unwrap();
    let est = summarize(values, 6);
    let lag0 = hermitian_cross_second_moment_lag0(l, r, len).unwrap();
    assert!(!compare_to_oracle(&est, lag0, 3.0).pass);
}

#[test]
fn mc_entry_variance() {
    let (l, n) = (0.9, 6);
    let spec = SystemSpec::jordan(l, n).unwrap();
    for j in [1, 3, 6] {
        let col = n - j + 1;
        let v = swsscs_entry_variance(l, n, j).unwrap();
        mc_gate(spec.clone(), 20, 2000, 10 + j as u64, v, move |b| b.x_minus[(j - 1, col)].powi(2));
    }
}

#[test]
fn mc_adjacent_mean() {
    let (l, len) = (0.6, 500);
    let spec = SystemSpec::jordan(l, 3).unwrap();
    let oracle = swsscs_adjacent_mean(l, len).unwrap();
    mc_gate(spec.clone(), len, 400, 21, oracle, |b| b.x_minus.row(1).dot(&b.x_minus.row(2)));
    let printed = swsscs_adjacent_mean_printed(l, len).unwrap();
    let est = summarize(map_trials(&spec, len, 400, 21, None, |b| b.x_minus.row(1).dot(&b.x_minus.row(2))).unwrap(), 21);
    assert!(!compare_to_oracle(&est, printed, 3.0).pass);
}

#[test]
fn adjacent_spread_scales_like_sqrt_len() {
    let l = 0.6;
    let spec = SystemSpec::jordan(l, 3).unwrap();
    let sd = |len: usize| {
        let v = map_trials(&spec, len, 200, 31, None, |b| b.x_minus.row(1).dot(&b.x_minus.row(2))).unwrap();
        summarize(v, 31).std
    };
    let s: Vec<f64> = [500, 1000, 2000].iter().map(|&n| sd(n) / (n as f64).sqrt()).collect();
    let hi = s.iter().copied().fold(0.0, f64::max);
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(hi / lo < 1.6, "{s:?}");
}

#[test]
fn mc_martingale_scale_band() {
    let (l, n, len) = (0.9, 5, 2000);
    let spec = SystemSpec::hermitian(&vec![l; n]).unwrap();
    let reg = Registry::builtin();
    let plan = TrialPlan { spec, len, trials: 200, base_seed: 41, statistic: "martingale_sigma1_sq".into() };
    let est = run_trials(&plan, &reg).unwrap();
    let r = est.mean / hermitian_martingale_scale(l, n, len).unwrap();
    assert!((1.0 / 3.0..=3.0).contains(&r), "ratio {r}");
}
