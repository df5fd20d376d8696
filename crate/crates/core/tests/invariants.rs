use std::sync::Arc;

use num_complex::Complex64;
use pdirac_core::eigen::{monotone_inequality_check, rayleigh};
use pdirac_core::*;
use proptest::prelude::*;

fn operator(m: usize, n: usize, twist: &[f64]) -> Arc<DiracOperator> {
    let model = Arc::new(TorusModel::unit(m, n, twist).unwrap());
    Arc::new(DiracOperator::new(model, build_gamma(m).unwrap()).unwrap())
}

fn t2() -> Arc<DiracOperator> {
    operator(2, 8, &[0.5, 0.0])
}

fn max_entry(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn symbol_squares_to_the_momentum_norm(m in 2usize..=6, xi in prop::collection::vec(-20.0f64..20.0, 6)) {
        let g = build_gamma(m).unwrap();
        let xi = &xi[..m];
        let s = g.symbol(xi);
        let n2: f64 = xi.iter().map(|x| x * x).sum();
        let id = CMatrix::identity(g.spinor_dim(), g.spinor_dim());
        let defect = max_entry(&(&s * &s - id * Complex64::new(n2, 0.0)));
        prop_assert!(defect <= 1e-13 * n2.max(1.0));
        // Hermitian symbol
        prop_assert!(max_entry(&(&s - s.adjoint())) <= 1e-14 * n2.sqrt().max(1.0));
    }

    #[test]
    fn squared_dirac_is_the_laplacian(seed in 0u64..10_000) {
        let d = operator(3, 6, &[0.5, 0.0, 0.5]);
        let f = random_field(d.model(), d.gamma(), seed);
        let dd = d.apply_d(&d.apply_d(&f).unwrap()).unwrap();
        let lap = d.apply_laplacian(&f).unwrap();
        prop_assert!(dd.sub(&lap).max_abs() < 1e-12 * lap.max_abs().max(1.0));
    }

    #[test]
    fn dirac_is_symmetric(seed in 0u64..10_000) {
        let d = t2();
        let f = random_field(d.model(), d.gamma(), seed);
        let g = random_field(d.model(), d.gamma(), seed + 77_777);
        let lhs = hermitian_inner(&d.apply_d(&f).unwrap(), &g).unwrap();
        let rhs = hermitian_inner(&f, &d.apply_d(&g).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn p_dirac_monotonicity(seed in 0u64..100_000, pi in 0usize..3, scale in 0.01f64..10.0) {
        let p = [1.5, 2.0, 3.0][pi];
        let d = t2();
        let f = random_field(d.model(), d.gamma(), seed);
        let g = random_field(d.model(), d.gamma(), seed + 1).scaled(scale);
        let check = monotone_inequality_check(&d, p, &f, &g).unwrap();
        prop_assert!(check.holds, "{:?}", check);
    }

    #[test]
    fn rayleigh_quotient_is_scale_and_phase_invariant(seed in 0u64..10_000, c in 0.1f64..10.0, theta in 0.0f64..std::f64::consts::TAU, pi in 0usize..3) {
        let p = [1.5, 2.0, 3.0][pi];
        let d = t2();
        let f = random_field(d.model(), d.gamma(), seed);
        let r = rayleigh(&d, p, &f).unwrap();
        let g = f.scaled_complex(Complex64::from_polar(c, theta));
        prop_assert!((rayleigh(&d, p, &g).unwrap() - r).abs() <= 1e-11 * r);
        // bounded below by the smallest momentum to the p-th power
        prop_assert!(r >= d.min_momentum().powf(p) * (1.0 - 1e-12) || p != 2.0);
    }

    #[test]
    fn energy_gradient_matches_central_differences(seed in 0u64..10_000, pi in 0usize..2, e in 2.5f64..3.5) {
        let p = [2.0, 1.5][pi];
        let d = t2();
        let energy = Energy::new(d.clone(), p, Some(1e-6), Nonlinearity::power(1.0, e).unwrap(), true).unwrap();
        let f = random_field(d.model(), d.gamma(), seed).scaled(0.3);
        let h = random_field(d.model(), d.gamma(), seed + 5);
        let analytic = inner(&energy.gradient(&f).unwrap(), &h).unwrap();
        let s = 1e-5;
        let mut fp = f.clone();
        fp.axpy(s, &h);
        let mut fm = f.clone();
        fm.axpy(-s, &h);
        let numeric = (energy.value(&fp).unwrap() - energy.value(&fm).unwrap()) / (2.0 * s);
        let tol = if p == 2.0 { 1e-6 } else { 1e-4 };
        prop_assert!((analytic - numeric).abs() <= tol * analytic.abs().max(1.0), "{analytic} vs {numeric}");
    }

    #[test]
    fn even_nonlinearities_give_even_energies(seed in 0u64..10_000, e in 1.2f64..3.5) {
        let d = t2();
        let energy = Energy::new(d.clone(), 2.0, None, Nonlinearity::power(0.7, e).unwrap(), true).unwrap();
        let f = random_field(d.model(), d.gamma(), seed);
        prop_assert_eq!(energy.value(&f).unwrap(), energy.value(&f.scaled(-1.0)).unwrap());
    }

    #[test]
    fn free_energy_is_homogeneous(seed in 0u64..10_000, t in 0.1f64..10.0, p in 1.2f64..1.9) {
        let d = t2();
        let energy = Energy::new(d.clone(), p, Some(0.0), Nonlinearity::zero(), false).unwrap();
        let f = random_field(d.model(), d.gamma(), seed);
        let v = energy.value(&f).unwrap();
        prop_assert!((energy.value(&f.scaled(t)).unwrap() - t.powf(p) * v).abs() <= 1e-12 * t.powf(p) * v);
    }

    #[test]
    fn constant_branch_is_critical(p in 1.3f64..1.95, e_off in 0.05f64..0.9, sub in any::<bool>(), amp in 0.1f64..10.0) {
        // exponents inside (1, p) or (p, p*) with p* = 2p/(2 − p) on T²;
        // the coupling is chosen so that the branch has amplitude `amp`
        let e = if sub { 1.0 + e_off * (p - 1.0) } else { p + e_off * (2.0 * p / (2.0 - p) - p) };
        let d = t2();
        let s = d.min_momentum();
        let c = s.powf(p) * amp.powf(p - e);
        let energy = Energy::new(d.clone(), p, Some(0.0), Nonlinearity::power(c, e).unwrap(), false).unwrap();
        let psi = energy.constant_branch().unwrap();
        let found = psi.fiber_norms()[0];
        prop_assert!((found - amp).abs() <= 1e-12 * amp);
        let scale = lp_norm(&d.apply_d(&psi).unwrap(), p).unwrap().powf(p - 1.0);
        prop_assert!(energy.residual_norm(&psi).unwrap() <= 1e-9 * scale);
        prop_assert!(energy.nehari_defect(&psi).unwrap() <= 1e-10);
    }
}

#[test]
fn gamma_relations_hold_up_to_dimension_six() {
    for m in 2..=6 {
        assert!(check_relations(&build_gamma(m).unwrap()) < 1e-14);
    }
}
