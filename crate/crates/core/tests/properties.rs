use free_jacobi::exact::words::{word_counts_bruteforce, word_counts_closed};
use free_jacobi::moments::{closed_form_lambda1, integrate_moments_at, InitMode, ProcessParams};
use free_jacobi::oracle::{simulate_unitary_bm, unitarity_defect, EigenBackend};
use free_jacobi::series::TruncatedSeries;
use free_jacobi::special::{laguerre1, ubm_moment};
use free_jacobi::spectral::{quadrature_moments, stationary_density, GridSpec};
use num_bigint::BigUint;
use proptest::prelude::*;

fn contraction_params() -> impl Strategy<Value = ProcessParams> {
    (0.05f64..0.95, 0.05f64..1.0, 0usize..2).prop_filter_map("valid geometry", |(theta, lambda, mode)| {
        let init = if mode == 0 { InitMode::PLeQ } else { InitMode::Orthogonal };
        ProcessParams::new(lambda, theta, init).ok()
    })
}

fn series(order: usize) -> impl Strategy<Value = TruncatedSeries> {
    prop::collection::vec(-1.0f64..1.0, order + 1).prop_map(|mut c| {
        c[0] = 1.0 + c[0].abs();
        TruncatedSeries::new(c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hierarchy_is_triangular(params in contraction_params(), t in 0.0f64..2.0, low in 1usize..6) {
        let full = integrate_moments_at(&params, &[t], 12, 1e-2).unwrap();
        let short = integrate_moments_at(&params, &[t], low, 1e-2).unwrap();
        for n in 0..=low {
            prop_assert!((full.last()[n] - short.last()[n]).abs() <= 1e-15);
        }
    }

    #[test]
    fn contraction_moments_stay_ordered(params in contraction_params(), t in 0.0f64..3.0) {
        let times = [t / 2.0, t];
        let traj = integrate_moments_at(&params, &times, 10, 1e-2).unwrap();
        prop_assert_eq!(traj.contraction_violation(1e-12), None);
    }

    #[test]
    fn first_moment_closed_form(t in 0.0f64..6.0) {
        let m = closed_form_lambda1(t, 1).unwrap();
        prop_assert!((m[1] - (1.0 + (-t).exp()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn series_sqrt_squares_back(f in series(10)) {
        let r = f.sqrt().unwrap();
        prop_assert!(r.mul(&r).max_abs_diff(&f) < 1e-10);
    }

    #[test]
    fn series_reciprocal_inverts(f in series(10)) {
        let one = f.mul(&f.reciprocal().unwrap());
        prop_assert!(one.max_abs_diff(&TruncatedSeries::constant(1.0, 10)) < 1e-9);
    }

    #[test]
    fn series_composition_is_associative(f in series(6), g in series(6), h in series(6)) {
        let shift = |s: &TruncatedSeries| {
            let mut c = s.coeffs().to_vec();
            c[0] = 0.0;
            TruncatedSeries::new(c)
        };
        let (g, h) = (shift(&g), shift(&h));
        let left = f.compose(&g).unwrap().compose(&h).unwrap();
        let right = f.compose(&g.compose(&h).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-9);
    }

    #[test]
    fn laguerre_three_term_recurrence(n in 1usize..30, x in 0.0f64..20.0) {
        let (prev, cur, next) = (laguerre1(n - 1, x), laguerre1(n, x), laguerre1(n + 1, x));
        let nf = n as f64;
        let residual = (nf + 1.0) * next - ((2.0 * nf + 2.0 - x) * cur - (nf + 1.0) * prev);
        prop_assert!(residual.abs() <= 1e-10 * (1.0 + cur.abs() * (nf + x)));
    }

    #[test]
    fn unitary_moments_are_bounded(n in 1u32..40, t in 0.0f64..10.0) {
        prop_assert!(ubm_moment(n, t).abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn stationary_density_has_unit_mass(lambda in 0.1f64..1.9, theta in 0.1f64..0.9) {
        prop_assume!(lambda * theta < 0.95);
        let d = stationary_density(lambda, theta, &GridSpec::Chebyshev { nodes: 2048 }).unwrap();
        let q = quadrature_moments(&d, 0);
        prop_assert!((q.moments[0] - 1.0).abs() < 1e-8, "mass {}", q.moments[0]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn word_counts_match_closed_forms(n in 1u32..7, k in 0u32..8) {
        let table = word_counts_bruteforce(n).unwrap();
        let closed = word_counts_closed(n, k).unwrap();
        prop_assert_eq!(BigUint::from(table.c(k)), closed.c);
        prop_assert_eq!(BigUint::from(table.d(k)), closed.d);
        prop_assert_eq!(BigUint::from(table.e(k)), closed.e);
    }

    #[test]
    fn random_walk_is_unitary(dim in 2usize..24, steps in 1usize..30, seed in any::<u64>(), t in 0.0f64..3.0) {
        let u = simulate_unitary_bm(dim, t, steps, seed, EigenBackend::Nalgebra).unwrap();
        prop_assert!(unitarity_defect(&u) < 1e-10);
    }
}
