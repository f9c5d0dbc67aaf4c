//! Verification suites. Every check compares one number against a threshold;
//! the report is deterministic for a given seed regardless of thread count.

use anyhow::{bail, Result};
use nalgebra::DMatrix;
use olsid_core::lds::{
    closed_form_entry, make_spec, power_norm_ratio, projector_decomposition, simulate_trial,
    simulate_with_noise, solve_lyapunov, solve_lyapunov_direct, DataBundle, SpecKind, SystemSpec,
};
use olsid_core::mc::{compare_to_oracle, map_trials, summarize};
use olsid_core::moments;
use olsid_core::noise::{derive_seed, noise_entry, noise_matrix};
use olsid_core::ols::{error_bounds, ols_fit, residual_columns, sandwich_bound_swsscs, unitary_invariance_check};
use olsid_core::spectra::{
    gershgorin, interlacing_check, last_row_margin, negative_second_moment, precision_constraints,
    sample_covariance, spectrum, svd_factorization, SIGN_TOL,
};
use olsid_core::talagrand::{frobenius_closed_form, talagrand_ratio, FROBENIUS_CAP};

use crate::output::num;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn le(suite: &'static str, name: impl Into<String>, value: f64, threshold: f64) -> Check {
    Check { suite, name: name.into(), value, threshold, pass: value <= threshold }
}

fn ge(suite: &'static str, name: impl Into<String>, value: f64, threshold: f64) -> Check {
    Check { suite, name: name.into(), value, threshold, pass: value >= threshold }
}

fn flag(suite: &'static str, name: impl Into<String>, ok: bool) -> Check {
    Check { suite, name: name.into(), value: if ok { 1.0 } else { 0.0 }, threshold: 1.0, pass: ok }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyContext {
    pub seed: u64,
    pub threads: Option<usize>,
}

type SuiteFn = fn(&VerifyContext) -> Result<Vec<Check>>;

pub struct Suite {
    pub name: &'static str,
    pub description: &'static str,
    run: SuiteFn,
}

fn uniform(seed: u64, k: u64, slot: u64) -> f64 {
    (derive_seed(derive_seed(seed, k), slot) >> 11) as f64 / (1u64 << 53) as f64
}

/// Pseudo-random full-rank test instance number `k`: iid Gaussian data, a
/// diagonal system or a Jordan block, with `n <= 10` and `N <= 100`.
pub fn random_instance(seed: u64, k: u64) -> (String, DataBundle) {
    let n = 1 + (uniform(seed, k, 0) * 10.0) as usize;
    let len = n + 5 + (uniform(seed, k, 1) * (96 - n) as f64) as usize;
    let kind = k % 3;
    let trial = k;
    match kind {
        0 => {
            let spec = SystemSpec::hermitian(&vec![0.0; n]).expect("valid");
            let mut b = simulate_trial(&spec, len, seed, trial).expect("valid");
            b.x_minus = noise_matrix(derive_seed(seed, k), 7, n, len);
            (format!("gaussian n={n} N={len}"), b)
        }
        1 => {
            let eigs: Vec<f64> = (0..n).map(|j| 1.9 * uniform(seed, k, 10 + j as u64) - 0.95).collect();
            let spec = SystemSpec::hermitian(&eigs).expect("valid");
            (format!("hermitian n={n} N={len}"), simulate_trial(&spec, len, seed, trial).expect("valid"))
        }
        _ => {
            let l = 0.1 + 0.8 * uniform(seed, k, 2);
            let spec = SystemSpec::jordan(l, n).expect("valid");
            (format!("jordan lambda={l:.3} n={n} N={len}"), simulate_trial(&spec, len, seed, trial).expect("valid"))
        }
    }
}

/// Random bundle from one of the two system families for OLS checks.
pub fn random_system_bundle(seed: u64, k: u64) -> DataBundle {
    let n = 1 + (uniform(seed, k, 0) * 8.0) as usize;
    let len = n + 10 + (uniform(seed, k, 1) * 190.0) as usize;
    let spec = if k.is_multiple_of(2) {
        SystemSpec::jordan(0.1 + 0.85 * uniform(seed, k, 2), n).expect("valid")
    } else {
        let eigs: Vec<f64> = (0..n).map(|j| 1.9 * uniform(seed, k, 10 + j as u64) - 0.95).collect();
        SystemSpec::hermitian(&eigs).expect("valid")
    };
    simulate_trial(&spec, len, seed, k).expect("valid")
}

/// Invariants every bundle must satisfy.
pub fn verify_bundle(b: &DataBundle) -> Vec<Check> {
    let s = "bundle";
    let n = b.dim();
    let len = b.len();
    let mut out = vec![
        le(s, "recursion_residual", b.recursion_residual(), 1e-12),
        flag(s, "initial_state_zero", b.x_minus.column(0).iter().all(|&v| v == 0.0)),
        flag(s, "shift_consistent", b.x_minus.columns(1, len - 1) == b.x_plus.columns(0, len - 1)),
        flag(s, "length_exceeds_dimension", len > n),
    ];
    let t = len / 2;
    out.push(flag(s, "noise_addressable", b.noise[(n - 1, t)] == noise_entry(b.seed, b.trial, t, n - 1)));
    out
}

fn suite_bundle(c: &VerifyContext) -> Result<Vec<Check>> {
    let specs = [
        SystemSpec::jordan(0.95, 12)?,
        SystemSpec::hermitian(&[0.9, -0.5, 0.0])?,
        make_spec(SpecKind::BlockDiagonal(vec![(0.7, 2), (-0.3, 3)]))?,
        make_spec(SpecKind::Dense(DMatrix::from_row_slice(2, 2, &[0.5, 0.4, -0.2, 0.3])))?,
    ];
    let mut out = Vec::new();
    for spec in &specs {
        out.extend(verify_bundle(&simulate_trial(spec, 500, c.seed, 0)?));
    }
    Ok(out)
}

fn suite_closed_form(c: &VerifyContext) -> Result<Vec<Check>> {
    let mut worst = 0.0f64;
    for (k, &(l, n)) in [(0.5, 2), (0.9, 5), (0.95, 8)].iter().enumerate() {
        let b = simulate_trial(&SystemSpec::jordan(l, n)?, 60, c.seed, k as u64)?;
        for j in 1..=n {
            for i in 0..b.len() {
                let x = b.x_minus[(j - 1, i)];
                worst = worst.max((closed_form_entry(&b, j, i)? - x).abs() / (1.0 + x.abs()));
            }
        }
    }
    let mut e = DMatrix::zeros(2, 3);
    e[(0, 0)] = 1.0;
    e[(1, 0)] = 1.0;
    let b = simulate_with_noise(&SystemSpec::jordan(0.5, 2)?, e, 0, 0)?;
    Ok(vec![
        le("closed-form", "max_relative_gap", worst, 1e-10),
        le("closed-form", "injected_example_gap", (closed_form_entry(&b, 1, 2)? - 1.5).abs(), 1e-15),
    ])
}

fn suite_lyapunov(_: &VerifyContext) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (name, spec) in [
        ("jordan_0.95_20", SystemSpec::jordan(0.95, 20)?),
        ("jordan_0.5_6", SystemSpec::jordan(0.5, 6)?),
        ("diag", SystemSpec::hermitian(&[0.9, 0.5, -0.7])?),
    ] {
        let it = solve_lyapunov(&spec)?;
        let d = solve_lyapunov_direct(&spec)?;
        out.push(le("lyapunov", format!("{name}_iterative_residual"), it.residual, 1e-10));
        out.push(le("lyapunov", format!("{name}_route_gap"), (&it.p - &d.p).norm() / d.p.norm(), 1e-8));
    }
    Ok(out)
}

fn suite_power(_: &VerifyContext) -> Result<Vec<Check>> {
    let s = SystemSpec::jordan(0.5, 2)?;
    let r1 = power_norm_ratio(&s, 1);
    let r40 = power_norm_ratio(&s, 40);
    Ok(vec![
        le("power-ratio", "bound_k1_gap", (r1.bound.unwrap_or(f64::NAN) - 1.0 / 3.0).abs(), 1e-15),
        le("power-ratio", "norm_k1_gap", (r1.actual - (1.0 + 2f64.sqrt()) / 2.0).abs(), 1e-14),
        le("power-ratio", "ratio_k40_gap_from_3", (r40.ratio.unwrap_or(f64::NAN) - 3.0).abs(), 0.1),
    ])
}

fn suite_projectors(_: &VerifyContext) -> Result<Vec<Check>> {
    let spec = make_spec(SpecKind::BlockDiagonal(vec![(0.5, 2), (0.3, 1), (0.5, 1)]))?;
    let n = spec.dim();
    let ps = projector_decomposition(&spec)?;
    let sum: DMatrix<f64> = ps.iter().map(|p| p.projector.clone()).sum();
    let rebuilt: DMatrix<f64> = ps.iter().map(|p| &p.projector * p.lambda + &p.nilpotent).sum();
    let idem = ps.iter().map(|p| (&p.projector * &p.projector - &p.projector).amax()).fold(0.0, f64::max);
    let nil = ps.iter().map(|p| p.nilpotent.pow(n as u32).amax()).fold(0.0, f64::max);
    Ok(vec![
        le("projectors", "sum_identity_gap", (sum - DMatrix::<f64>::identity(n, n)).amax(), 0.0),
        le("projectors", "idempotence_gap", idem, 0.0),
        le("projectors", "nilpotence_gap", nil, 0.0),
        le("projectors", "reconstruction_gap", (rebuilt - spec.matrix()).amax(), 1e-15),
    ])
}

pub fn neg2mom_instances(seed: u64, count: u64) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut used = 0;
    for k in 0..count {
        let (_, b) = random_instance(seed, k);
        worst = worst.max(negative_second_moment(&b.x_minus)?.max_relative_gap());
        used += 1;
    }
    Ok((worst, used))
}

fn suite_neg2mom(c: &VerifyContext) -> Result<Vec<Check>> {
    let (worst, _) = neg2mom_instances(c.seed, 200)?;
    let x = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let m = negative_second_moment(&x)?;
    Ok(vec![
        le("neg2mom", "max_relative_gap_200_instances", worst, 1e-8),
        le("neg2mom", "orthonormal_example_gap", (m.via_trace - 2.0).abs(), 1e-14),
    ])
}

/// Worst precision-constraint residual relative to its tolerance, and worst sign sum.
pub fn precision_instances(seed: u64, count: u64) -> Result<(f64, f64)> {
    let mut worst = 0.0f64;
    let mut sign = f64::NEG_INFINITY;
    for k in 0..count {
        let (_, b) = random_instance(seed, k);
        let r = precision_constraints(&b.x_minus)?;
        let m = r.residual_lin1.max().max(r.max_residual_lin2.max()).max(r.diag_vs_distance.max());
        worst = worst.max(m / r.tol);
        sign = sign.max(r.sign_sums.max());
    }
    Ok((worst, sign))
}

fn suite_precision(c: &VerifyContext) -> Result<Vec<Check>> {
    let (worst, sign) = precision_instances(c.seed, 200)?;
    Ok(vec![
        le("precision", "max_residual_over_tolerance", worst, 1.0),
        le("precision", "max_sign_sum", sign, SIGN_TOL),
    ])
}

/// Counts of Gershgorin, interlacing and last-row violations over `count` instances.
pub fn spectral_violations(seed: u64, count: u64) -> Result<(usize, usize, usize)> {
    let (mut g, mut il, mut lr) = (0, 0, 0);
    for k in 0..count {
        let (_, b) = random_instance(seed, k);
        let s = sample_covariance(&b.x_minus);
        if !gershgorin(&s).contained {
            g += 1;
        }
        for kk in 0..s.nrows() {
            if !interlacing_check(&s, kk)?.holds {
                il += 1;
            }
        }
        let l1 = s.clone().symmetric_eigenvalues().max();
        if last_row_margin(&s) < -1e-10 * l1 {
            lr += 1;
        }
    }
    Ok((g, il, lr))
}

fn suite_gershgorin(c: &VerifyContext) -> Result<Vec<Check>> {
    let (g, _, _) = spectral_violations(c.seed, 100)?;
    let ex = gershgorin(&DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]));
    Ok(vec![le("gershgorin", "violations", g as f64, 0.0), flag("gershgorin", "example_contained", ex.contained)])
}

fn suite_interlacing(c: &VerifyContext) -> Result<Vec<Check>> {
    let (_, il, lr) = spectral_violations(c.seed ^ 1, 100)?;
    Ok(vec![
        le("interlacing", "interlacing_violations", il as f64, 0.0),
        le("interlacing", "last_row_violations", lr as f64, 0.0),
    ])
}

fn suite_svd(c: &VerifyContext) -> Result<Vec<Check>> {
    let mut orth = 0.0f64;
    let mut recon = 0.0f64;
    let mut eig = 0.0f64;
    for k in 0..50 {
        let (_, b) = random_instance(c.seed, k);
        let x = &b.x_minus;
        let n = x.nrows();
        let f = svd_factorization(x);
        let id = DMatrix::<f64>::identity(n, n);
        orth = orth.max((f.u.transpose() * &f.u - &id).amax()).max((f.v.transpose() * &f.v - &id).amax());
        recon = recon.max((&f.u * DMatrix::from_diagonal(&f.sigma) * f.v.transpose() - x).norm() / x.norm());
        let sp = spectrum(x);
        for j in 0..n {
            eig = eig.max((sp.eigenvalues[j] - sp.singular_values[j].powi(2)).abs() / sp.eigenvalues[0]);
        }
    }
    Ok(vec![
        le("svd", "orthonormality_gap", orth, 1e-8),
        le("svd", "reconstruction_gap", recon, 1e-10),
        le("svd", "eigen_singular_gap", eig, 1e-8),
    ])
}

/// Worst relative gap of the OLS error identity over `count` bundles.
pub fn ols_identity_instances(seed: u64, count: u64) -> f64 {
    (0..count).map(|k| ols_fit(&random_system_bundle(seed, k)).identity_residual).fold(0.0, f64::max)
}

fn suite_ols_identity(c: &VerifyContext) -> Result<Vec<Check>> {
    Ok(vec![le("ols-identity", "max_relative_gap_100_bundles", ols_identity_instances(c.seed, 100), 1e-8)])
}

/// Violations of the SVD and Frobenius sandwiches over `count` bundles.
pub fn bound_violations(seed: u64, count: u64) -> (usize, usize) {
    let mut svd = 0;
    let mut frob = 0;
    for k in 0..count {
        let eb = error_bounds(&random_system_bundle(seed, k));
        if !eb.svd_holds() {
            svd += 1;
        }
        if !eb.frobenius_holds() {
            frob += 1;
        }
    }
    (svd, frob)
}

fn suite_ols_bounds(c: &VerifyContext) -> Result<Vec<Check>> {
    let (svd, frob) = bound_violations(c.seed, 100);
    Ok(vec![
        le("ols-bounds", "svd_sandwich_violations", svd as f64, 0.0),
        le("ols-bounds", "frobenius_sandwich_violations", frob as f64, 0.0),
    ])
}

fn suite_residual_columns(c: &VerifyContext) -> Result<Vec<Check>> {
    let mut gap = 0.0f64;
    let mut id = 0.0f64;
    for k in 0..50 {
        let b = random_system_bundle(c.seed, k);
        let eb = error_bounds(&b);
        let r = residual_columns(&b)?;
        gap = gap.max(r.max_norm_gap / eb.kappa.max(1.0));
        id = id.max(r.max_identity_residual);
    }
    Ok(vec![
        le("residual-columns", "norm_vs_distance_gap_over_kappa", gap, 1e-8),
        le("residual-columns", "right_inverse_gap", id, 1e-8),
    ])
}

fn suite_unitary(c: &VerifyContext) -> Result<Vec<Check>> {
    let mut gap = 0.0f64;
    for k in 0..50 {
        let b = random_system_bundle(c.seed, k);
        let u = noise_matrix(derive_seed(c.seed, k), 3, b.dim(), b.dim()).qr().q();
        gap = gap.max(unitary_invariance_check(&b, &u)?.relative_gap);
    }
    Ok(vec![le("unitary", "max_relative_gap", gap, 1e-8)])
}

fn suite_sandwich(_: &VerifyContext) -> Result<Vec<Check>> {
    let (lo, hi) = sandwich_bound_swsscs(1, 400, 0.6)?;
    let v = 1.0 / (2.0 * 0.6 * 20.0);
    let mut order = 0.0f64;
    for n in 1..=20 {
        for &len in &[n + 1, 100, 2000] {
            for &l in &[0.3, 0.6, 0.92, 0.99] {
                let (a, b) = sandwich_bound_swsscs(n, len, l)?;
                order = order.max((a - b) / b);
            }
        }
    }
    Ok(vec![
        le("sandwich", "n1_lower_gap", (lo - v).abs() / v, 1e-14),
        le("sandwich", "n1_upper_gap", (hi - v).abs() / v, 1e-14),
        le("sandwich", "lower_over_upper_excess", order, 1e-12),
    ])
}

fn mc_z(spec: &SystemSpec, len: usize, trials: usize, seed: u64, threads: Option<usize>, oracle: f64, f: impl Fn(&DataBundle) -> f64 + Send + Sync) -> Result<f64> {
    let v = map_trials(spec, len, trials, seed, threads, f)?;
    Ok(compare_to_oracle(&summarize(v, seed), oracle, 3.0).z_score.abs())
}

/// `|z|` of each Monte Carlo oracle check at trajectory length `len`.
pub fn oracle_z_scores(seed: u64, len: usize, trials: usize, threads: Option<usize>) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    let l = 0.8;
    let s = SystemSpec::hermitian(&[l])?;
    let z = mc_z(&s, len, trials, derive_seed(seed, 1), threads, moments::hermitian_row_mean(l, len)?, |b| {
        b.x_minus.row(0).norm_squared()
    })?;
    out.push((format!("hermitian_row_mean_N{len}"), z));
    let (l, r) = (0.8, 0.6);
    let s = SystemSpec::hermitian(&[l, r])?;
    let inner = |b: &DataBundle| b.x_minus.row(0).dot(&b.x_minus.row(1));
    let z = mc_z(&s, len, trials, derive_seed(seed, 2), threads, 0.0, inner)?;
    out.push((format!("hermitian_cross_mean_N{len}"), z));
    let m2 = moments::hermitian_cross_second_moment(l, r, len)?;
    let z = mc_z(&s, len, trials, derive_seed(seed, 3), threads, m2, move |b| inner(b).powi(2))?;
    out.push((format!("hermitian_cross_second_moment_N{len}"), z));
    let (l, n) = (0.9, 6);
    let s = SystemSpec::jordan(l, n)?;
    for j in [1usize, 4] {
        let col = n - j + 1;
        let v = moments::swsscs_entry_variance(l, n, j)?;
        let z = mc_z(&s, len, trials, derive_seed(seed, 4 + j as u64), threads, v, move |b| {
            b.x_minus[(j - 1, col)].powi(2)
        })?;
        out.push((format!("swsscs_entry_variance_j{j}"), z));
    }
    let l = 0.6;
    let s = SystemSpec::jordan(l, 3)?;
    let z = mc_z(&s, len, trials, derive_seed(seed, 9), threads, moments::swsscs_adjacent_mean(l, len)?, |b| {
        b.x_minus.row(1).dot(&b.x_minus.row(2))
    })?;
    out.push((format!("swsscs_adjacent_mean_N{len}"), z));
    Ok(out)
}

fn suite_moments(c: &VerifyContext) -> Result<Vec<Check>> {
    Ok(oracle_z_scores(c.seed, 500, 400, c.threads)?
        .into_iter()
        .map(|(name, z)| le("moment-oracles", format!("{name}_abs_z"), z, 3.0))
        .collect())
}

fn suite_martingale(c: &VerifyContext) -> Result<Vec<Check>> {
    let (l, n, len) = (0.9, 5, 2000);
    let spec = SystemSpec::hermitian(&vec![l; n])?;
    let v = map_trials(&spec, len, 100, c.seed, c.threads, |b| {
        let m = olsid_core::spectra::martingale_stats(&b.noise, &b.x_minus);
        (m.sigma_max.powi(2), m.sigma_max <= m.product_bound * (1.0 + 1e-12))
    })?;
    let mean = v.iter().map(|t| t.0).sum::<f64>() / v.len() as f64;
    let r = mean / moments::hermitian_martingale_scale(l, n, len)?;
    Ok(vec![
        ge("martingale", "scale_ratio_lower", r, 1.0 / 3.0),
        le("martingale", "scale_ratio_upper", r, 3.0),
        le("martingale", "product_bound_violations", v.iter().filter(|t| !t.1).count() as f64, 0.0),
    ])
}

fn suite_talagrand(c: &VerifyContext) -> Result<Vec<Check>> {
    let rho = 0.9;
    let spec = SystemSpec::hermitian(&[rho])?;
    let v = map_trials(&spec, 5000, 200, c.seed, c.threads, talagrand_ratio)?;
    let est = summarize(v.iter().map(|r| r.ratio).collect(), c.seed);
    let viol = v.iter().filter(|r| r.ratio > r.bound * (1.0 + 1e-12)).count();
    Ok(vec![
        le("talagrand", "hermitian_q99", est.q99(), 1.1 / (1.0 - rho)),
        le("talagrand", "deterministic_bound_violations", viol as f64, 0.0),
    ])
}

/// Worst relative gap between the term-by-term Frobenius sum and `||X_-||_F^2`.
pub fn frobenius_gap(seed: u64, count: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..count {
        let n = 1 + (uniform(seed, k, 0) * 6.0) as usize;
        let len = n + 1 + (uniform(seed, k, 1) * (40 - n) as f64) as usize;
        let l = 0.1 + 0.85 * uniform(seed, k, 2);
        let b = simulate_trial(&SystemSpec::jordan(l, n)?, len, seed, k)?;
        let f = frobenius_closed_form(l, &b.noise, FROBENIUS_CAP)?;
        worst = worst.max((f - b.x_minus.norm_squared()).abs() / f);
    }
    Ok(worst)
}

fn suite_frobenius(c: &VerifyContext) -> Result<Vec<Check>> {
    Ok(vec![le("frobenius", "max_relative_gap_20_seeds", frobenius_gap(c.seed, 20)?, 1e-8)])
}

pub fn suites() -> Vec<Suite> {
    macro_rules! s {
        ($n:expr, $d:expr, $f:expr) => {
            Suite { name: $n, description: $d, run: $f }
        };
    }
    vec![
        s!("bundle", "recursion, zero start and addressable noise", suite_bundle),
        s!("closed-form", "binomial expansion of Jordan trajectories", suite_closed_form),
        s!("lyapunov", "iterative and direct Lyapunov solutions", suite_lyapunov),
        s!("power-ratio", "norm of matrix powers against the multiplicity bound", suite_power),
        s!("projectors", "spectral projectors and nilpotent parts", suite_projectors),
        s!("neg2mom", "sum sigma^-2 = trace inverse = sum distance^-2", suite_neg2mom),
        s!("precision", "linear constraints of the precision matrix", suite_precision),
        s!("gershgorin", "eigenvalues inside Gershgorin discs", suite_gershgorin),
        s!("interlacing", "Cauchy interlacing and last-row bound", suite_interlacing),
        s!("svd", "thin SVD orthonormality and reconstruction", suite_svd),
        s!("ols-identity", "OLS error equals ||E X^+||_F", suite_ols_identity),
        s!("ols-bounds", "deterministic error sandwiches", suite_ols_bounds),
        s!("residual-columns", "pseudo-inverse columns and row distances", suite_residual_columns),
        s!("unitary", "OLS error under orthogonal change of basis", suite_unitary),
        s!("sandwich", "explicit Jordan-block error bounds", suite_sandwich),
        s!("moment-oracles", "closed-form moments against Monte Carlo", suite_moments),
        s!("martingale", "scale of the noise/state cross matrix", suite_martingale),
        s!("talagrand", "state to noise energy ratio", suite_talagrand),
        s!("frobenius", "term-by-term Frobenius norm of the state history", suite_frobenius),
    ]
}

/// Runs all suites, or only `filter`.
pub fn run_verify(filter: Option<&str>, ctx: &VerifyContext) -> Result<Vec<Check>> {
    let all = suites();
    if let Some(f) = filter {
        if !all.iter().any(|s| s.name == f) {
            bail!("unknown suite `{f}`");
        }
    }
    let mut out = Vec::new();
    for s in all.iter().filter(|s| filter.is_none_or(|f| f == s.name)) {
        out.extend((s.run)(ctx)?);
    }
    Ok(out)
}

/// CSV report with one row per check.
pub fn report_csv(checks: &[Check]) -> String {
    let mut s = String::from("suite,check,value,threshold,pass\n");
    for c in checks {
        s.push_str(&format!("{},{},{},{},{}\n", c.suite, c.name, num(c.value), num(c.threshold), c.pass));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_least_twelve_suites_with_unique_names() {
        let s = suites();
        assert!(s.len() >= 12);
        let mut names: Vec<_> = s.iter().map(|s| s.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), s.len());
    }

    #[test]
    fn corrupted_bundle_fails_recursion_check() {
        let mut b = simulate_trial(&SystemSpec::jordan(0.8, 3).unwrap(), 50, 1, 0).unwrap();
        assert!(verify_bundle(&b).iter().all(|c| c.pass));
        b.x_plus[(1, 20)] += 1.0;
        let failed: Vec<_> = verify_bundle(&b).into_iter().filter(|c| !c.pass).map(|c| c.name).collect();
        assert!(failed.contains(&"recursion_residual".to_string()));
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_verify(Some("nope"), &VerifyContext { seed: 0, threads: None }).is_err());
    }

    #[test]
    fn instances_are_full_rank_and_bounded() {
        for k in 0..60 {
            let (_, b) = random_instance(3, k);
            assert!(b.dim() <= 10 && b.len() <= 100 && b.len() > b.dim());
            assert!(!spectrum(&b.x_minus).degenerate);
        }
    }
}
