use super::*;
use crate::fockspace::{Boundary, ChainSpec};
use crate::laxkit::LaurentOperator;
use crate::fockspace::ChainOps;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn fit_recovers_scalar_and_shift() {
    let spec = ChainSpec::new(2, 3, c(0.6, 0.8), Boundary::Periodic);
    let ops = ChainOps::new(&spec).unwrap();
    let x = OperatorLaurentMatrix::scalar_diag(2, &LaurentOperator::monomial(ops.b_dag(1) * ops.b(2), 0, 1));
    let shift = identity_shifts(&ops.identity, &[2]);
    let target = x.scale(c(2.0, -1.0)).add(&shift[0].scale(c(0.5, 0.0)));
    let f = fit_linear(std::slice::from_ref(&target), &[vec![x.clone()], vec![shift[0].clone()]], 1);
    assert!((f.coefficients[0] - c(2.0, -1.0)).norm() < 1e-12);
    assert!((f.coefficients[1] - c(0.5, 0.0)).norm() < 1e-12);
    assert!(f.residual < 1e-14);
    let strict = fit_linear(&[target], &[vec![x]], 1);
    assert!(strict.residual > 0.1);
}

#[test]
fn solve_dense_handles_singular_directions() {
    let a = vec![vec![c(2.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]];
    let x = solve_dense(a, vec![c(4.0, 2.0), c(0.0, 0.0)]);
    assert_eq!(x, vec![c(2.0, 1.0), c(0.0, 0.0)]);
}

#[test]
fn controls_and_panics() {
    let ok = Check::new("big", 12, 1e-5, |_| Ok(Outcome::residual(1.0))).control().run(1);
    assert!(ok.passed);
    let bad = Check::new("boom", 1, 1.0, |_| panic!("nope")).run(1);
    assert!(!bad.passed);
    assert!(bad.detail.unwrap().contains("nope"));
    let err = Check::new("err", 1, 1.0, |_| Err("broken".into())).run(1);
    assert!(!err.passed && err.residual == f64::MAX);
}

#[test]
fn reflection_identity_and_control() {
    let spec = ChainSpec::default_open();
    let good = check_reflection_equation(KMatrix::identity(), &spec, 3, "k.identity", false);
    assert!(good.passed && good.residual < 1e-12);
    let k = KMatrix::constant_diag(c(1.0, 0.0), c(2.0, 0.0));
    let bad = check_reflection_equation(k, &spec, 3, "k.diag12", true);
    assert!(bad.passed && bad.residual > 1e-4, "{}", bad.residual);
}

#[test]
fn sampled_points_avoid_degenerate_arguments() {
    let mut rng = rng_for(11, "pts");
    for (u, w) in sample_points(&mut rng, 200) {
        assert!((u.norm() - 1.0).abs() < 1e-14 && (w.norm() - 1.0).abs() < 1e-14);
        assert!((u - w).norm() > 0.1 && (u * w - 1.0).norm() > 0.1);
    }
}

#[test]
fn small_closed_suite_is_deterministic() {
    let spec = ChainSpec::new(2, 4, Complex64::from_polar(1.0, 0.7), Boundary::Periodic);
    let a = run_closed_suite(&spec, 5).without_timings();
    let b = run_closed_suite(&spec, 5).without_timings();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let rll = a.checks.iter().find(|c| c.name == "rll.sampled").unwrap();
    assert!(rll.passed);
}

#[test]
fn invalid_spec_surfaces_as_failed_check() {
    let spec = ChainSpec::new(3, 5, c(0.0, 1.0), Boundary::Periodic);
    let r = run_closed_suite(&spec, 1);
    let s = r.checks.iter().find(|c| c.name == "spec").unwrap();
    assert!(!s.passed);
    assert!(!r.overall);
}
