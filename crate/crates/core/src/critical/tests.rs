use super::*;
use crate::clifford::build_gamma;
use crate::dirac::DiracOperator;
use crate::energy::Nonlinearity;
use std::f64::consts::PI;
use std::sync::Arc;

fn t3() -> Arc<DiracOperator> {
    let model = Arc::new(crate::lattice::TorusModel::unit(3, 8, &[0.5, 0.0, 0.0]).unwrap());
    Arc::new(DiracOperator::new(model, build_gamma(3).unwrap()).unwrap())
}

fn energy(nl: Nonlinearity) -> Energy {
    Energy::new(t3(), 2.0, None, nl, false).unwrap()
}

fn cubic() -> Energy {
    energy(Nonlinearity::power(1.0, 4.0).unwrap())
}

fn sublinear() -> Energy {
    energy(Nonlinearity::power(1.0, 1.5).unwrap())
}

#[test]
fn rim_of_the_free_energy_is_the_norm_power() {
    let e = energy(Nonlinearity::zero());
    for r in [0.1, 1.0, 3.0] {
        let rho = rim_estimate(&e, r, 32, 4).unwrap();
        assert!((rho - 0.5 * r * r).abs() <= 1e-12 * r * r, "{rho}");
    }
}

#[test]
fn rim_is_positive_for_small_radius_and_zero_at_zero() {
    let e = cubic();
    assert!(rim_estimate(&e, 1e-2, 32, 0).unwrap() > 0.0);
    assert_eq!(rim_estimate(&e, 0.0, 32, 0).unwrap(), 0.0);
    assert!(rim_estimate(&e, 1.0, 8, 0).is_err());
}

#[test]
fn find_e_along_the_constant_direction() {
    let e = cubic();
    let dir = constant_direction(&e);
    let end = find_e(&e, &dir, 1.0).unwrap();
    assert!(e.value(&end.field).unwrap() <= 0.0);
    assert!(e.sobolev_norm(&end.field).unwrap() > 1.0);
    let again = find_e(&e, &dir, 1.0).unwrap();
    assert_eq!(end.t, again.t);

    // closed form along the ray: a t² − b t⁴
    let a = 0.5 * e.sobolev_norm(&dir).unwrap().powi(2);
    let b = 0.25 * lp_norm(&dir, 4.0).unwrap().powi(4);
    let t = end.t;
    assert!((e.value(&end.field).unwrap() - (a * t * t - b * t.powi(4))).abs() < 1e-9 * b * t.powi(4));
}

#[test]
fn find_e_needs_superlinear_growth() {
    let e = energy(Nonlinearity::zero());
    assert!(matches!(find_e(&e, &constant_direction(&e), 1.0), Err(Error::Classification(_))));
    let e = cubic();
    assert!(find_e(&e, &e.dirac().zeros(), 1.0).is_err());
}

#[test]
fn mountain_pass_seeded_at_the_constant_branch_stays_there() {
    let e = cubic();
    let config = SolveConfig { start: Start::ConstantBranch, ..Default::default() };
    let cp = mountain_pass(&e, &config).unwrap();
    assert!((cp.value - PI.powi(4) / 4.0).abs() < 1e-6 * PI.powi(4) / 4.0);
    assert!(cp.grad_residual < 1e-8);
    assert!(cp.iterations <= 1);
    assert_eq!(cp.kind, CriticalKind::MountainPass);
}

#[test]
fn mountain_pass_from_a_random_field() {
    let e = cubic();
    let config = SolveConfig::default();
    let cp = mountain_pass(&e, &config).unwrap();
    assert!(cp.value > 0.0);
    assert!(cp.grad_residual <= config.tol);
    assert!(cp.nehari_defect < 1e-6);
    assert!(cp.value >= cp.rim.unwrap() - 1e-10);
    assert!(cp.weak_form_defect(&e, 50, 11).unwrap() <= 10.0 * config.tol);
    let report = ps_diagnostic(&cp.trace);
    assert!(report.bounded);
    assert!(report.final_residual <= config.tol);

    let minus = cp.negated(&e).unwrap();
    assert_eq!(minus.value, cp.value);
    assert!(minus.grad_residual <= config.tol);
}

#[test]
fn mountain_pass_rejects_sublinear_models() {
    assert!(matches!(mountain_pass(&sublinear(), &SolveConfig::default()), Err(Error::Classification(_))));
}

#[test]
fn global_minimum_matches_the_constant_branch() {
    let e = sublinear();
    let closed = e.constant_branch_value().unwrap();
    // amplitude π^{−4}, value A^ν (1/2 − 1/ν)
    let a = PI.powi(-4);
    assert!((closed - a.powf(1.5) * (0.5 - 1.0 / 1.5)).abs() < 1e-15);
    let cp = global_minimize(&e, &SolveConfig::default()).unwrap();
    assert!(cp.value < 0.0);
    assert!(cp.value <= closed + 1e-8);
    assert!(cp.grad_residual < 1e-6);
}

#[test]
fn global_minimum_of_the_free_energy_is_zero() {
    let e = energy(Nonlinearity::zero());
    let cp = global_minimize(&e, &SolveConfig::default()).unwrap();
    assert!(cp.value.abs() < 1e-20, "{}", cp.value);
    assert!(cp.field.max_abs() < 1e-10);
    let report = ps_diagnostic(&cp.trace);
    assert!(report.bounded);
}

#[test]
fn single_level_fountain_is_the_galerkin_mountain_pass() {
    let e = cubic();
    let config = SolveConfig::default();
    let sweep = fountain_sequence(&e, &config, 1).unwrap();
    assert!(sweep.failures.is_empty());
    let h1 = crate::galerkin::SpectralBasis::lowest(e.dirac(), 2);
    let mp = galerkin_mountain_pass(&e, &config, &h1).unwrap();
    let f = &sweep.points[0];
    assert_eq!(f.kind, CriticalKind::Fountain(1));
    assert!((f.value - mp.value).abs() <= 1e-8 * mp.value);
    // both lowest eigenfields have orthogonal spinors, so |ψ| is constant on H_1
    assert!((f.value - PI.powi(4) / 4.0).abs() < 1e-8);
    assert_eq!(f.negated(&e).unwrap().value, f.value);
}

#[test]
fn dual_fountain_values_are_negative_and_ascending() {
    let e = sublinear();
    let sweep = dual_fountain_sequence(&e, &SolveConfig::default(), 2).unwrap();
    assert!(sweep.failures.is_empty(), "{:?}", sweep.failures);
    assert_eq!(sweep.points.len(), 2);
    assert!(sweep.points.iter().all(|c| c.value < 0.0));
    assert!(sweep.nondecreasing);
    assert!(sweep.points[0].value <= e.constant_branch_value().unwrap() + 1e-12);
    for c in &sweep.points {
        assert_eq!(c.negated(&e).unwrap().value, c.value);
    }
}

#[test]
fn ray_doubling_is_flagged_as_divergence() {
    let e = cubic();
    let end = find_e(&e, &random_field(e.dirac().model(), e.dirac().gamma(), 3), 1.0).unwrap();
    let report = ps_diagnostic(&end.trace);
    assert!(!report.bounded);
    assert!(report.label.starts_with("ray divergence"), "{}", report.label);
}

#[test]
fn ps_diagnostic_of_an_empty_trace() {
    let report = ps_diagnostic(&[]);
    assert!(report.bounded && report.monotone_residual);
}

#[test]
fn sweep_monotonicity_flags() {
    let cp = |value: f64| CriticalPoint {
        field: t3().zeros(),
        value,
        grad_residual: 0.0,
        nehari_defect: 0.0,
        kind: CriticalKind::Fountain(1),
        iterations: 0,
        seed: 0,
        rim: None,
        space: None,
        trace: Vec::new(),
    };
    let s = Sweep::new(vec![cp(1.0), cp(1.0), cp(2.0), cp(3.0)], Vec::new());
    assert!(s.nondecreasing);
    assert_eq!(s.strict_increases, 2);
    let s = Sweep::new(vec![cp(2.0), cp(1.0)], Vec::new());
    assert!(!s.nondecreasing);
}

#[test]
fn solve_config_validation() {
    assert!(SolveConfig::default().validate().is_ok());
    assert!(SolveConfig { path_points: 4, ..Default::default() }.validate().is_err());
    assert!(SolveConfig { tol: 0.0, ..Default::default() }.validate().is_err());
    let json = serde_json::to_string(&SolveConfig::default()).unwrap();
    let back: SolveConfig = serde_json::from_str(&json).unwrap();
    assert_eq!(back, SolveConfig::default());
    assert!(serde_json::from_str::<SolveConfig>(r#"{"bogus": 1}"#).is_err());
}
