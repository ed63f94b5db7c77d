use super::closed_forms::ClosedForms;
use super::*;
use crate::fockspace::safe_residual;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn model(boundary: Boundary) -> LaxModel {
    let spec = ChainSpec::new(3, 4, Complex64::from_polar(1.0, 0.7), boundary);
    LaxModel::new(&spec).unwrap()
}

fn pt() -> Spectral {
    Spectral::Point { u: Complex64::from_polar(1.0, 0.9), w: Complex64::from_polar(1.0, -0.4) }
}

#[test]
fn rll_holds_at_a_point() {
    let m = model(Boundary::Periodic);
    let mode = pt();
    for n in 1..=3 {
        let la = m.l(n, Var::U, mode).unwrap().embed_a();
        let lb = m.l(n, Var::W, mode).unwrap().embed_b();
        let r = m.r(RArg::Ratio, mode);
        let lhs = r.mul(&la).mul(&lb);
        let rhs = lb.mul(&la).mul(&r);
        assert!(matrix_residual(&lhs, &rhs, 2) < 1e-12);
    }
}

#[test]
fn hat_l_inverts_l_at_reflected_argument() {
    let m = model(Boundary::Open);
    let u = cx(0.3, 1.1);
    let lh = m.hat_l(2, Var::U, Spectral::Point { u, w: cx(1.0, 0.0) }).unwrap();
    let l = m.l(2, Var::U, Spectral::Point { u: 1.0 / u, w: cx(1.0, 0.0) }).unwrap();
    let id = OperatorLaurentMatrix::identity(2, 4, 3);
    assert!(matrix_residual(&lh.mul(&l), &id, 1) < 1e-12);

    let lit = m.clone().with_crossing(Crossing::Literal);
    let lh = lit.hat_l(2, Var::U, Spectral::Point { u, w: cx(1.0, 0.0) }).unwrap();
    assert!(matrix_residual(&lh.mul(&l), &id, 1) > 1e-3);
}

#[test]
fn closed_generators_intertwine() {
    let m = model(Boundary::Periodic);
    let mode = pt();
    let t = m.transfer_closed(mode).unwrap();
    for n in 1..=3 {
        let lb = m.l(n, Var::W, mode).unwrap();
        let lhs = lb.commutator_with(&t);
        let a_next = m.generator_a(n + 1, GeneratorKind::Closed, mode).unwrap();
        let a_here = m.generator_a(n, GeneratorKind::Closed, mode).unwrap();
        let rhs = a_next.mul(&lb).sub(&lb.mul(&a_here));
        assert!(matrix_residual(&lhs, &rhs, 3) < 1e-11, "n = {n}");
    }
}

#[test]
fn closed_hamiltonians_match_hopping_sums() {
    let m = model(Boundary::Periodic);
    let h = m.extract_hamiltonians().unwrap();
    let cf = ClosedForms::new(&m.ops);
    assert!(safe_residual(&h.h_plus, &cf.h_plus(), 2).unwrap() < 1e-12);
    assert!(safe_residual(&h.h_minus, &cf.h_minus(), 2).unwrap() < 1e-12);
    assert!(h.h_plus1.pruned(1e-12).is_zero());
}

#[test]
fn open_minus_hamiltonian_is_rescaled_plus() {
    let m = model(Boundary::Open);
    let h = m.extract_hamiltonians().unwrap();
    let cf = ClosedForms::new(&m.ops);
    assert!(safe_residual(&h.h_minus, &h.h_plus.scale(m.q() * m.q()), 2).unwrap() < 1e-12);
    assert!(safe_residual(&h.h_phys, &cf.open_h_phys(), 2).unwrap() < 1e-12);
    assert!(safe_residual(&h.h_plus0, &cf.open_h_plus0(), 1).unwrap() < 1e-12);
}

#[test]
fn hatted_closed_generator_is_reparametrized_plain_one() {
    let m = model(Boundary::Periodic);
    let (u, w) = (cx(0.8, 0.5), cx(-0.3, 0.9));
    let q = m.q();
    for n in 1..=3 {
        let hat = m.generator_a(n, GeneratorKind::HattedClosed, Spectral::Point { u, w }).unwrap();
        let plain = m
            .generator_a(n, GeneratorKind::Closed, Spectral::Point { u: -1.0 / (q * u), w: 1.0 / w })
            .unwrap();
        assert!(matrix_residual(&hat, &plain, 3) < 1e-11);
    }
}

#[test]
fn symbolic_and_point_agree() {
    let m = model(Boundary::Periodic);
    let (u, w) = (cx(0.4, 0.7), cx(0.9, -0.2));
    let sym = m.generator_b_closed(2, Spectral::Symbolic).unwrap().eval(u, w);
    let num = m.generator_b_closed(2, Spectral::Point { u, w }).unwrap();
    assert!(matrix_residual(&sym, &num, 0) < 1e-12);
}

#[test]
fn appendix_b_plus_matches_closed_form() {
    let m = model(Boundary::Periodic);
    let cf = ClosedForms::new(&m.ops);
    for n in 1..=3 {
        let b = m.generator_b_closed(n, Spectral::Symbolic).unwrap();
        let (b0, b2, bp) = m.normalized_b(&b, true).unwrap();
        assert!(matrix_residual(&b0, &cf.printed_b_plus0(), 2) < 1e-12);
        assert!(matrix_residual(&b2, &cf.printed_b_plus2(n), 2) < 1e-12);
        assert!(matrix_residual(&bp, &cf.printed_b_plus(n), 2) < 1e-12);
    }
}

#[test]
fn diagonal_monomial_inverse_rejects_off_diagonal() {
    let m = model(Boundary::Periodic);
    let l = m.l(1, Var::U, Spectral::Symbolic).unwrap();
    assert!(l.diagonal_monomial_inverse().is_err());
}

#[test]
fn r_matrix_swap_symmetry() {
    let r = RMatrix::new();
    assert_eq!(r.swapped(), r);
    let e = r.eval(cx(2.0, 0.0), cx(1.0, 0.0));
    assert!((e[0][0] - cx(1.5, 0.0)).norm() < 1e-15);
    assert!((e[1][2]).norm() < 1e-15);
}
