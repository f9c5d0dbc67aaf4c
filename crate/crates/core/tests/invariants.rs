use approx::assert_relative_eq;
use nalgebra::{DMatrix, Matrix2};
use olsid_core::lds::{
    closed_form_entry, make_spec, power_norm_ratio, projector_decomposition, simulate, simulate_trial,
    solve_lyapunov, solve_lyapunov_direct, SpecKind, SystemSpec,
};
use olsid_core::linalg::thin_svd;
use olsid_core::noise::{noise_entry, noise_matrix};
use olsid_core::ols::{error_bounds, ols_fit, residual_columns, sandwich_bound_swsscs, unitary_invariance_check};
use olsid_core::spectra::{
    gershgorin, interlacing_check, last_row_margin, negative_second_moment, precision_constraints,
    sample_covariance, solve_precision_2d, spectrum, svd_factorization,
};
use olsid_core::talagrand::{frobenius_closed_form, talagrand_ratio, FROBENIUS_CAP};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = SystemSpec> {
    prop_oneof![
        (0.05f64..0.95, 1usize..7).prop_map(|(l, n)| SystemSpec::jordan(l, n).unwrap()),
        prop::collection::vec(-0.95f64..0.95, 1..7).prop_map(|e| SystemSpec::hermitian(&e).unwrap()),
        prop::collection::vec((-0.9f64..0.9, 1usize..3), 1..4)
            .prop_map(|b| make_spec(SpecKind::BlockDiagonal(b)).unwrap()),
    ]
}

fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    noise_matrix(seed, 99, n, n).qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bundle_recursion_holds(spec in spec_strategy(), extra in 1usize..60, seed in any::<u64>()) {
        let len = spec.dim() + extra;
        let b = simulate(&spec, len, seed).unwrap();
        prop_assert!(b.recursion_residual() <= 1e-12);
        prop_assert!(b.x_minus.column(0).iter().all(|&v| v == 0.0));
        prop_assert_eq!(b.x_minus.columns(1, len - 1), b.x_plus.columns(0, len - 1));
        prop_assert_eq!(b.noise, noise_matrix(seed, 0, spec.dim(), len));
    }

    #[test]
    fn noise_entries_are_isolated(seed in any::<u64>(), trial in 0u64..1000, t in 0usize..300, j in 0usize..20) {
        let m = noise_matrix(seed, trial, j + 1, t + 1);
        prop_assert_eq!(m[(j, t)], noise_entry(seed, trial, t, j));
    }

    #[test]
    fn closed_form_matches_simulation(l in 0.05f64..0.99, n in 1usize..8, extra in 1usize..25, seed in any::<u64>()) {
        let b = simulate(&SystemSpec::jordan(l, n).unwrap(), n + extra, seed).unwrap();
        let len = b.len();
        for j in 1..=n {
            for i in 0..len {
                let v = closed_form_entry(&b, j, i).unwrap();
                let x = b.x_minus[(j - 1, i)];
                prop_assert!((v - x).abs() <= 1e-10 * (1.0 + x.abs()), "j={} i={} {} vs {}", j, i, v, x);
            }
            let v = closed_form_entry(&b, j, len).unwrap();
            prop_assert!((v - b.x_plus[(j - 1, len - 1)]).abs() <= 1e-10 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn lyapunov_routes_agree(spec in spec_strategy()) {
        let it = solve_lyapunov(&spec).unwrap();
        let d = solve_lyapunov_direct(&spec).unwrap();
        prop_assert!(it.residual <= 1e-10);
        prop_assert!(d.residual <= 1e-10);
        prop_assert!((&it.p - &d.p).norm() <= 1e-8 * d.p.norm());
        prop_assert!((&it.p - it.p.transpose()).norm() <= 1e-12 * it.p.norm());
        let ev = it.p.clone().symmetric_eigenvalues();
        prop_assert!(ev.min() > 0.0);
    }

    #[test]
    fn projectors_decompose(spec in spec_strategy()) {
        let n = spec.dim();
        let ps = projector_decomposition(&spec).unwrap();
        let mut sum = DMatrix::zeros(n, n);
        let mut rebuilt = DMatrix::zeros(n, n);
        for p in &ps {
            prop_assert_eq!(&p.projector * &p.projector, p.projector.clone());
            prop_assert_eq!(p.nilpotent.pow(n as u32), DMatrix::zeros(n, n));
            sum += &p.projector;
            rebuilt += &p.projector * p.lambda + &p.nilpotent;
        }
        prop_assert_eq!(sum, DMatrix::identity(n, n));
        prop_assert!((rebuilt - spec.matrix()).amax() <= 1e-15);
    }

    #[test]
    fn spectrum_invariants(spec in spec_strategy(), extra in 5usize..80, seed in any::<u64>()) {
        let b = simulate(&spec, spec.dim() + extra, seed).unwrap();
        let x = &b.x_minus;
        let sp = spectrum(x);
        prop_assume!(!sp.degenerate);
        let l1 = sp.eigenvalues[0];
        for k in 0..spec.dim() {
            prop_assert!((sp.eigenvalues[k] - sp.singular_values[k].powi(2)).abs() <= 1e-8 * l1);
            prop_assert!(sp.distances[k] <= x.row(k).norm() * (1.0 + 1e-12));
        }
        let m = negative_second_moment(x).unwrap();
        prop_assert!(m.max_relative_gap() <= 1e-8, "{:?}", m);
        let s = sample_covariance(x);
        prop_assert!(gershgorin(&s).contained);
        for k in 0..spec.dim() {
            prop_assert!(interlacing_check(&s, k).unwrap().holds);
        }
        prop_assert!(last_row_margin(&s) >= -1e-10 * l1);
    }

    #[test]
    fn precision_invariants(spec in spec_strategy(), extra in 5usize..80, seed in any::<u64>()) {
        let b = simulate(&spec, spec.dim() + extra, seed).unwrap();
        let r = precision_constraints(&b.x_minus).unwrap();
        prop_assert!(r.holds, "{:?}", r);
        prop_assert!(r.sign_holds, "{:?}", r.sign_sums);
    }

    #[test]
    fn svd_factorization_is_orthonormal(spec in spec_strategy(), extra in 1usize..50, seed in any::<u64>()) {
        let b = simulate(&spec, spec.dim() + extra, seed).unwrap();
        prop_assume!(!spectrum(&b.x_minus).degenerate);
        let f = svd_factorization(&b.x_minus);
        let n = spec.dim();
        prop_assert!((f.u.transpose() * &f.u - DMatrix::<f64>::identity(n, n)).amax() <= 1e-10);
        prop_assert!((f.v.transpose() * &f.v - DMatrix::<f64>::identity(n, n)).amax() <= 1e-8);
        let rec = &f.u * DMatrix::from_diagonal(&f.sigma) * f.v.transpose();
        prop_assert!((rec - &b.x_minus).norm() <= 1e-10 * b.x_minus.norm());
        let v0 = b.x_minus.transpose() * f.u.column(0) / f.sigma[0];
        prop_assert!((v0 - f.v.column(0)).norm() <= 1e-10);
    }

    #[test]
    fn precision_2d_is_inverse(a in 0.1f64..10.0, b in 0.1f64..10.0, r in -0.99f64..0.99) {
        let c = r * (a * b).sqrt();
        let g = Matrix2::new(a, c, c, b);
        let v = solve_precision_2d(&g).unwrap();
        prop_assert!((g * v - Matrix2::identity()).amax() <= 1e-10 / (1.0 - r * r));
    }

    #[test]
    fn ols_invariants(spec in spec_strategy(), extra in 5usize..100, seed in any::<u64>()) {
        let b = simulate(&spec, spec.dim() + extra, seed).unwrap();
        let f = ols_fit(&b);
        prop_assume!(!f.degenerate);
        prop_assert!(f.identity_residual <= 1e-8, "{}", f.identity_residual);
        let eb = error_bounds(&b);
        prop_assert!(eb.deterministic_holds(), "{:?}", eb);
        let rc = residual_columns(&b).unwrap();
        prop_assert!(rc.max_norm_gap <= 1e-8 * eb.kappa.max(1.0));
        prop_assert!(rc.max_identity_residual <= 1e-8);
        let u = random_orthogonal(spec.dim(), seed);
        prop_assert!(unitary_invariance_check(&b, &u).unwrap().relative_gap <= 1e-8);
    }

    #[test]
    fn ols_minimises_one_step_residual(spec in spec_strategy(), extra in 5usize..60, seed in any::<u64>()) {
        let b = simulate(&spec, spec.dim() + extra, seed).unwrap();
        let f = ols_fit(&b);
        prop_assume!(!f.degenerate);
        let n = spec.dim();
        let cost = |m: &DMatrix<f64>| (&b.x_plus - m * &b.x_minus).norm_squared();
        let best = cost(&f.a_hat);
        for k in 0..20 {
            let d = noise_matrix(seed ^ 0x5eed, 1000 + k, n, n);
            let step = d.scale(0.01 / d.norm());
            prop_assert!(cost(&(&f.a_hat + &step)) >= best * (1.0 - 1e-12));
        }
    }

    #[test]
    fn swsscs_upper_bound_decreases_in_len(l in 0.05f64..0.99, n in 1usize..15, len in 20usize..2000) {
        prop_assume!(len > n);
        let (lo, hi) = sandwich_bound_swsscs(n, len, l).unwrap();
        let (_, hi2) = sandwich_bound_swsscs(n, len + 1, l).unwrap();
        prop_assert!(lo > 0.0 && lo.is_finite() && hi.is_finite());
        prop_assert!(hi2 < hi);
    }

    #[test]
    fn talagrand_bound_and_closed_form(l in 0.05f64..0.95, n in 1usize..7, len in 8usize..41, seed in any::<u64>()) {
        prop_assume!(len > n);
        let b = simulate(&SystemSpec::jordan(l, n).unwrap(), len, seed).unwrap();
        let r = talagrand_ratio(&b);
        prop_assert!(r.ratio <= r.bound * (1.0 + 1e-12));
        let f = frobenius_closed_form(l, &b.noise, FROBENIUS_CAP).unwrap();
        prop_assert!((f - b.x_minus.norm_squared()).abs() <= 1e-8 * f);
    }
}

#[test]
fn trial_streams_are_independent_of_each_other() {
    let s = SystemSpec::jordan(0.5, 3).unwrap();
    let a = simulate_trial(&s, 30, 1, 4).unwrap();
    let b = simulate_trial(&s, 30, 1, 4).unwrap();
    let c = simulate_trial(&s, 30, 1, 5).unwrap();
    assert_eq!(a.x_minus, b.x_minus);
    assert_ne!(a.x_minus, c.x_minus);
}

#[test]
fn power_ratio_stays_bounded_for_canonical_specs() {
    for spec in [
        SystemSpec::jordan(0.8, 4).unwrap(),
        SystemSpec::hermitian(&[0.9, -0.5]).unwrap(),
        make_spec(SpecKind::BlockDiagonal(vec![(0.7, 3), (0.7, 1), (-0.4, 2)])).unwrap(),
    ] {
        let ratios: Vec<f64> = (20..200).step_by(20).map(|k| power_norm_ratio(&spec, k).ratio.unwrap()).collect();
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(hi / lo < 50.0, "{ratios:?}");
    }
    let dense = make_spec(SpecKind::Dense(DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.0, 0.3]))).unwrap();
    assert!(power_norm_ratio(&dense, 3).bound.is_none());
}

#[test]
fn thin_svd_of_square_cross_matrix() {
    let b = simulate(&SystemSpec::jordan(0.6, 4).unwrap(), 40, 8).unwrap();
    let m = &b.noise * b.x_minus.transpose();
    let s = thin_svd(&m);
    assert_relative_eq!(&s.u * DMatrix::from_diagonal(&s.sigma) * s.v.transpose(), m, max_relative = 1e-10);
}
