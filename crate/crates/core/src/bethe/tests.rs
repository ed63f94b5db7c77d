use super::*;
use crate::laxkit::closed_forms::ClosedForms;

fn spec(boundary: Boundary) -> ChainSpec {
    ChainSpec::new(3, 5, Complex64::from_polar(1.0, 0.7), boundary)
}

fn pts() -> Vec<Complex64> {
    [(0.3, 0.2), (0.1, -0.4), (-0.2, 0.5), (0.45, 0.05), (-0.35, -0.15)]
        .iter()
        .map(|&(a, b)| Complex64::new(a, b).exp())
        .collect()
}

#[test]
fn closed_form_one_magnon() {
    let q = spec(Boundary::Periodic).q;
    for k in 0..3 {
        let set = solve_bae(3, q, Boundary::Periodic, &[k]).unwrap();
        let z = periodic_one_magnon(3, q, k);
        assert!((set.roots[0] - z).norm() < 1e-12);
        // substitution into (-q^-1)^N e^{2λN} = 1
        let lhs = (-1.0 / q).powf(3.0) * (6.0 * z).exp();
        assert!((lhs - 1.0).norm() < 1e-12);
        assert!(set.residual < 1e-12);
        assert_eq!(newton_steps_from(&set).unwrap(), 0);
    }
}

/// One-root open equation solved on a grid with secant polishing, independent of the solver.
fn grid_roots(n: usize) -> Vec<Complex64> {
    let f = |z: Complex64| (4.0 * n as f64 * z).exp() - 1.0;
    let mut found: Vec<Complex64> = Vec::new();
    for a in -4..=4 {
        for b in 0..64 {
            let mut z0 = Complex64::new(a as f64 * 0.05, b as f64 * PI / 64.0);
            let mut z1 = z0 + 1e-3;
            for _ in 0..60 {
                let (f0, f1) = (f(z0), f(z1));
                if (f1 - f0).norm() == 0.0 {
                    break;
                }
                let z2 = z1 - f1 * (z1 - z0) / (f1 - f0);
                z0 = z1;
                z1 = z2;
            }
            if f(z1).norm() < 1e-12 && z1.im >= -1e-9 && z1.im < PI - 1e-9 && z1.re.abs() < 1e-6
                && !found.iter().any(|w| (w - z1).norm() < 1e-6) {
                    found.push(z1);
                }
        }
    }
    found
}

#[test]
fn open_one_magnon_against_grid() {
    let q = spec(Boundary::Open).q;
    let grid = grid_roots(3);
    assert_eq!(grid.len(), 6);
    for k in 0..6 {
        let set = solve_bae(3, q, Boundary::Open, &[k]).unwrap();
        assert!(set.residual < 1e-10);
        let r = set.roots[0];
        assert!(grid.iter().any(|g| dist_mod_ipi(g - r) < 1e-9), "root {r} not on grid");
    }
}

#[test]
fn vacuum_formulas() {
    let q = spec(Boundary::Periodic).q;
    let l = Complex64::new(0.3, -0.1);
    let p = lambda_eval(&BetheRootSet::vacuum(3, q, Boundary::Periodic), l).unwrap();
    assert!((p - ((3.0 * l).exp() - (-3.0 * l).exp())).norm() < 1e-13);
    let o = lambda_eval(&BetheRootSet::vacuum(3, q, Boundary::Open), l).unwrap();
    assert!((o - (q.powi(3) * (6.0 * l).exp() + q.powi(-3) * (-6.0 * l).exp())).norm() < 1e-13);
}

#[test]
fn near_pole_rejected() {
    let q = spec(Boundary::Periodic).q;
    let set = solve_bae(3, q, Boundary::Periodic, &[1]).unwrap();
    let e = lambda_eval(&set, set.roots[0] + 1e-5).unwrap_err();
    assert_eq!(e, BetheError::NearPole { index: 0 });
    assert!(lambda_eval(&set, Complex64::new(0.3, 0.0)).unwrap().is_finite());
}

#[test]
fn periodic_vacuum_kappa() {
    let s = spec(Boundary::Periodic);
    let r = match_spectrum(&s, &BetheRootSet::vacuum(3, s.q, Boundary::Periodic), &pts()).unwrap();
    assert!((r.kappa - s.q.powf(-1.5)).norm() < 1e-12);
    assert!(r.max_mismatch < 1e-10);
}

#[test]
fn colliding_quantum_numbers() {
    let q = spec(Boundary::Periodic).q;
    assert!(matches!(solve_bae(3, q, Boundary::Periodic, &[1, 4]), Err(BetheError::CollidingRoots(_))));
}

#[test]
fn sector_too_large() {
    let s = ChainSpec::new(3, 2, Complex64::from_polar(1.0, 0.7), Boundary::Periodic);
    let set = BetheRootSet { m: 2, ..BetheRootSet::vacuum(3, s.q, Boundary::Periodic) };
    assert!(matches!(match_spectrum(&s, &set, &pts()), Err(BetheError::SectorTooLarge(_))));
}

fn basis_state(s: &ChainSpec, occ: &[usize]) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); s.dim()];
    v[s.index_of(occ)] = Complex64::new(1.0, 0.0);
    v
}

fn mix(s: &ChainSpec, parts: &[(&[usize], Complex64)]) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); s.dim()];
    for (occ, c) in parts {
        v[s.index_of(occ)] += c;
    }
    v
}

#[test]
fn evolution_identity_and_static() {
    let s = spec(Boundary::Periodic);
    let dynm = SectorDynamics::new(&s, 2).unwrap();
    let qi = mix(&s, &[(&[1, 0, 0], Complex64::new(0.6, 0.1)), (&[0, 1, 1], Complex64::new(-0.3, 0.4))]);
    let qf = mix(&s, &[(&[0, 0, 0], Complex64::new(0.2, 0.0)), (&[0, 1, 0], Complex64::new(0.5, -0.2)), (&[1, 0, 1], Complex64::new(0.1, 0.3))]);
    let id = SparseOperator::identity(s.d, s.n);
    let overlap: Complex64 = qf.iter().zip(&qi).map(|(a, b)| a.conj() * b).sum();
    for t in [0.0, 0.4, 1.3, 2.0] {
        let e = dynm.expectation(&id, t, &qf, &qi);
        assert!((e - overlap).norm() < 1e-12, "t = {t}: {e} vs {overlap}");
    }
    let model = LaxModel::new(&s).unwrap();
    let b1 = model.ops.b(1).clone();
    let direct: Complex64 = qf.iter().zip(b1.apply(&qi)).map(|(a, b)| a.conj() * b).sum();
    assert!((dynm.expectation(&b1, 0.0, &qf, &qi) - direct).norm() < 1e-12);
}

#[test]
fn evolution_derivative_matches_equation_of_motion() {
    let s = spec(Boundary::Periodic);
    let model = LaxModel::new(&s).unwrap();
    let cf = ClosedForms::new(&model.ops);
    let bdot = cf.printed_eom(1)[1].clone();
    let b1 = model.ops.b(1).clone();
    let qi = basis_state(&s, &[0, 1, 1]);
    let qf = mix(&s, &[(&[0, 1, 0], Complex64::new(1.0, 0.0)), (&[1, 0, 0], Complex64::new(0.0, 1.0)), (&[0, 0, 1], Complex64::new(0.5, 0.0))]);
    let h = 1e-5;
    let e = |t| evolve_expectation(&s, &b1, t, &qf, &qi, 2).unwrap();
    let fd = (e(h) - e(-h)) / (2.0 * h);
    let oracle: Complex64 = qf.iter().zip(bdot.apply(&qi)).map(|(a, b)| a.conj() * b).sum::<Complex64>() * ci(-1.0);
    assert!((fd - oracle).norm() < 1e-6, "{fd} vs {oracle}");
}

#[test]
fn evolution_rejects_out_of_sector_state() {
    let s = spec(Boundary::Periodic);
    let id = SparseOperator::identity(s.d, s.n);
    let a = basis_state(&s, &[1, 1, 1]);
    assert!(evolve_expectation(&s, &id, 0.1, &a, &a, 2).is_err());
}


fn half_shift(q: Complex64) -> Complex64 {
    -i_mu(q) / 2.0
}

#[test]
fn periodic_spectrum_needs_half_shift() {
    let s = spec(Boundary::Periodic);
    for k in 0..3 {
        let set = solve_bae(3, s.q, Boundary::Periodic, &[k]).unwrap();
        let raw = match_spectrum(&s, &set, &pts()).unwrap();
        assert!(raw.max_mismatch > 1e-2, "k = {k}: {:e}", raw.max_mismatch);
        let opts = MatchOptions { root_shift: half_shift(s.q), ..Default::default() };
        let fixed = match_spectrum_with(&s, &set, &pts(), opts).unwrap();
        assert!(fixed.passed(), "k = {k}: {:e}", fixed.max_mismatch);
        assert!((fixed.kappa - s.q.powf(-1.5)).norm() < 1e-12);
    }
}

#[test]
fn periodic_two_magnons_by_continuation() {
    let s = spec(Boundary::Periodic);
    for qn in default_quantum_numbers(3, 2) {
        let set = solve_bae(3, s.q, Boundary::Periodic, &qn).unwrap();
        assert!(set.residual < 1e-10);
        let opts = MatchOptions { root_shift: half_shift(s.q), ..Default::default() };
        let r = match_spectrum_with(&s, &set, &pts(), opts).unwrap();
        assert!(r.passed(), "{qn:?}: {:e}", r.max_mismatch);
    }
}

#[test]
fn residue_separates_roots_from_perturbed_roots() {
    let s = spec(Boundary::Periodic);
    for qn in [vec![0], vec![2], vec![0, 1]] {
        let set = solve_bae(3, s.q, Boundary::Periodic, &qn).unwrap().shifted(half_shift(s.q));
        for k in 0..set.m {
            assert!(pole_residue(&set, k, 1e-3, 32).unwrap() < 1e-6);
            let moved = perturbed(&set, k, Complex64::new(0.01, 0.0));
            assert!(pole_residue(&moved, k, 1e-3, 32).unwrap() > 1e-2);
        }
        // printed roots carry a genuine pole
        let raw = solve_bae(3, s.q, Boundary::Periodic, &qn).unwrap();
        assert!(pole_residue(&raw, 0, 1e-3, 32).unwrap() > 1e-2);
    }
}

#[test]
fn open_formula_misses_vacuum() {
    let s = spec(Boundary::Open);
    let r = match_spectrum(&s, &BetheRootSet::vacuum(3, s.q, Boundary::Open), &pts()).unwrap();
    // one constant cannot absorb the missing middle Laurent terms
    assert!(r.max_mismatch > 1e-2);
    assert!(r.points[0].relative_mismatch < 1e-12);
}

#[test]
fn strict_match_reports_failure() {
    let s = spec(Boundary::Open);
    let set = solve_bae(3, s.q, Boundary::Open, &[1]).unwrap();
    match match_spectrum_strict(&s, &set, &pts()) {
        Err(BetheError::NoEigenvalueWithin { mismatch, report }) => {
            assert_eq!(mismatch, report.max_mismatch);
            assert_eq!(report.points.len(), 5);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn quantum_number_enumeration() {
    assert_eq!(default_quantum_numbers(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    assert_eq!(default_quantum_numbers(3, 1).len(), 3);
}
