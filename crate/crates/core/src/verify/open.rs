use super::closed::{a_intertwining, hatted_equals_plain, closed_form_outcome, e, model, negative_controls, operator_fit, rll_sampled, transfer_commutator, zero_curvature_constructed};
use super::{fit_linear, fmt_cs, reflection_residual, sample_points, Check, Outcome};
use crate::coeffring::Var;
use crate::fockspace::{safe_residual, ChainSpec};
use crate::laxkit::closed_forms::ClosedForms;
use crate::laxkit::{matrix_residual, Crossing, GeneratorKind, KMatrix, LaxModel, OperatorLaurentMatrix, Spectral};
use num_complex::Complex64;

/// Fits `L̂_n(u) L_n(1/u) ≈ f(u) · 1` at each point; returns the worst fit residual and the
/// fitted `f` values.
pub(super) fn crossing_fit(m: &LaxModel, points: &[Complex64]) -> Result<(f64, Vec<Complex64>), String> {
    let (d, s) = (m.spec().d, m.spec().n);
    let id = OperatorLaurentMatrix::identity(2, d, s);
    let mut worst: f64 = 0.0;
    let mut fs = Vec::new();
    for &u in points {
        let one = Complex64::new(1.0, 0.0);
        for n in 1..=m.spec().n {
            let lh = m.hat_l(n, Var::U, Spectral::Point { u, w: one }).map_err(e)?;
            let l = m.l(n, Var::U, Spectral::Point { u: 1.0 / u, w: one }).map_err(e)?;
            let f = fit_linear(&[lh.mul(&l)], &[vec![id.clone()]], 1);
            worst = worst.max(f.residual);
            if n == 1 {
                fs.push(f.coefficients[0]);
            }
        }
    }
    Ok((worst, fs))
}

pub fn open_checks(spec: &ChainSpec) -> Vec<Check> {
    let spec = *spec;
    let q = spec.q;
    let mut v = vec![Check::new("spec", 0, 0.0, move |_| spec.validate().map(|_| Outcome::residual(0.0)).map_err(e))];

    v.push(Check::new("reflection.identity", 7, 1e-12, move |rng| {
        reflection_residual(&KMatrix::identity(), q, rng, 20).map(Outcome::residual)
    }));
    v.push(Check::new("reflection.scalar", 7, 1e-12, move |rng| {
        let c = Complex64::new(0.3, -1.7);
        reflection_residual(&KMatrix::constant_diag(c, c), q, rng, 20).map(Outcome::residual)
    }));
    v.push(
        Check::new("control.reflection.diag12", 7, 1e-4, move |rng| {
            let k = KMatrix::constant_diag(Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0));
            reflection_residual(&k, q, rng, 20).map(Outcome::residual)
        })
        .control(),
    );

    v.push(Check::new("crossing.inverse", 8, 1e-10, move |rng| {
        let m = model(&spec)?;
        let mut pts = vec![Complex64::new(1.0, 0.0)];
        pts.extend(sample_points(rng, 10).into_iter().map(|p| p.0));
        let (r, fs) = crossing_fit(&m, &pts)?;
        let (lit, lf) = crossing_fit(&m.clone().with_crossing(Crossing::Literal), &pts[..1])?;
        Ok(Outcome::residual(r).with_calibration(fs[..1].to_vec()).with_detail(format!(
            "f(u) = {} at every sample; with u -> q^-1 u^-1 the best scalar is {} at residual {lit:.3e}",
            fmt_cs(&fs[..1]),
            fmt_cs(&lf)
        )))
    }));

    v.push(Check::new("rll.sampled", 2, 1e-10, move |rng| rll_sampled(&model(&spec)?, rng, 20).map(Outcome::residual)));
    v.push(Check::new("transfer.commute", 3, 1e-10, move |rng| {
        transfer_commutator(&model(&spec)?, rng, 3).map(Outcome::residual)
    }));

    let interior: Vec<usize> = (2..spec.n).collect();
    let s = interior.clone();
    v.push(Check::new("generator.open_a_intertwining", 4, 1e-9, move |rng| {
        a_intertwining(&model(&spec)?, GeneratorKind::Open, &s, rng, 10).map(Outcome::residual)
    }));
    let s = interior.clone();
    v.push(Check::new("generator.open_hatted_intertwining", 4, 1e-9, move |rng| {
        a_intertwining(&model(&spec)?, GeneratorKind::HattedOpen, &s, rng, 10).map(Outcome::residual)
    }));
    v.push(Check::new("generator.hatted_equals_plain", 4, 1e-9, move |rng| hatted_equals_plain(&model(&spec)?, rng)));
    v.push(Check::new("generator.open_hatted_boundary", 4, 1e-9, move |rng| {
        let m = model(&spec)?;
        let mut worst: f64 = 0.0;
        let mut per_site = Vec::new();
        for n in 1..=spec.n + 1 {
            let mut site: f64 = 0.0;
            for (u, w) in sample_points(rng, 10) {
                let mode = Spectral::Point { u, w };
                let a = m.generator_a(n, GeneratorKind::Open, mode).map_err(e)?;
                let ah = m.generator_a(n, GeneratorKind::HattedOpen, mode).map_err(e)?;
                site = site.max(matrix_residual(&a, &ah, 2));
            }
            per_site.push(format!("n={n}: {site:.2e}"));
            if n == 1 || n == spec.n + 1 {
                worst = worst.max(site);
            }
        }
        Ok(Outcome::residual(worst).with_detail(format!("boundary sites checked; all sites: {}", per_site.join(", "))))
    }));

    v.push(Check::new("hamiltonian.open_leading", 5, 1e-10, move |_| {
        let m = model(&spec)?;
        let h = m.extract_hamiltonians().map_err(e)?;
        let cf = ClosedForms::new(&m.ops);
        let r = safe_residual(&h.h_plus0, &cf.open_h_plus0(), 0)
            .map_err(e)?
            .max(safe_residual(&h.h_minus0, &cf.open_h_minus0(), 0).map_err(e)?)
            .max(h.h_plus1.max_abs())
            .max(h.h_minus1.max_abs());
        Ok(Outcome::residual(r))
    }));
    v.push(Check::new("hamiltonian.open_second", 5, 1e-10, move |_| {
        let m = model(&spec)?;
        let h = m.extract_hamiltonians().map_err(e)?;
        let cf = ClosedForms::new(&m.ops);
        let r = safe_residual(&h.h_plus2, &cf.open_h_plus2(), 2)
            .map_err(e)?
            .max(safe_residual(&h.h_minus2, &cf.open_h_minus2(), 2).map_err(e)?);
        Ok(Outcome::residual(r))
    }));
    v.push(Check::new("hamiltonian.open_closed_form", 5, 1e-10, move |_| {
        let m = model(&spec)?;
        let h = m.extract_hamiltonians().map_err(e)?;
        let cf = ClosedForms::new(&m.ops);
        let r = safe_residual(&h.h_plus, &cf.open_h_plus(), 2)
            .map_err(e)?
            .max(safe_residual(&h.h_minus, &cf.open_h_minus(), 2).map_err(e)?)
            .max(safe_residual(&h.h_phys, &cf.open_h_phys(), 2).map_err(e)?);
        Ok(Outcome::residual(r))
    }));
    v.push(Check::new("hamiltonian.minus_is_q2_plus", 5, 1e-10, move |_| {
        let m = model(&spec)?;
        let h = m.extract_hamiltonians().map_err(e)?;
        let fit = operator_fit(&h.h_minus, &h.h_plus, 2);
        let r = safe_residual(&h.h_minus, &h.h_plus.scale(q * q), 2).map_err(e)?;
        Ok(Outcome::residual(r).with_calibration(fit.calibration.unwrap_or_default()))
    }));

    type Printed = fn(&ClosedForms) -> OperatorLaurentMatrix;
    let b_forms: [(&str, usize, Printed); 3] = [
        ("closed_form.open_b_plus0", 0, |c| c.printed_open_b_plus0()),
        ("closed_form.open_b_plus2", 1, |c| c.printed_open_b_plus2()),
        ("closed_form.open_b_plus", 2, |c| c.printed_open_b_plus()),
    ];
    for (name, which, printed) in b_forms {
        v.push(Check::new(name, 5, 1e-9, move |_| {
            let m = model(&spec)?;
            let cf = ClosedForms::new(&m.ops);
            let b = m.generator_b_open(1, Spectral::Symbolic).map_err(e)?;
            let parts = m.normalized_b(&b, true).map_err(e)?;
            let con = [parts.0, parts.1, parts.2][which].clone();
            Ok(closed_form_outcome(&[con], &[printed(&cf)], &m.ops.identity, 2))
        }));
    }
    v.push(Check::new("closed_form.open_a1", 5, 1e-9, move |_| {
        let m = model(&spec)?;
        let h = m.extract_hamiltonians().map_err(e)?;
        let cf = ClosedForms::new(&m.ops);
        let con = m.expanded_generator(1, true, &h).map_err(e)?;
        Ok(closed_form_outcome(&[con], &[cf.printed_open_a1()], &m.ops.identity, 2))
    }));

    let eoms = ["dynamics.open_eom.vdot", "dynamics.open_eom.bdot", "dynamics.open_eom.bdagdot"];
    for (k, name) in eoms.into_iter().enumerate() {
        v.push(Check::new(name, 6, 1e-10, move |_| {
            let m = model(&spec)?;
            let h = m.extract_hamiltonians().map_err(e)?;
            let cf = ClosedForms::new(&m.ops);
            let x = [m.ops.v(1), m.ops.b(1), m.ops.b_dag(1)][k];
            safe_residual(&h.h_phys.commutator(x), &cf.printed_open_eom()[k], 2).map(Outcome::residual).map_err(e)
        }));
    }
    let s: Vec<usize> = (1..spec.n).collect();
    v.push(Check::new("dynamics.open_zero_curvature", 6, 1e-9, move |_| {
        zero_curvature_constructed(&model(&spec)?, &s).map(Outcome::residual)
    }));
    v.push(Check::new("dynamics.k_dot", 6, 1e-10, move |rng| {
        let m = model(&spec)?;
        let mut worst: f64 = 0.0;
        for (u, w) in sample_points(rng, 10) {
            let mode = Spectral::Point { u, w };
            let a = m.generator_a(1, GeneratorKind::Open, mode).map_err(e)?;
            let ah = m.generator_a(1, GeneratorKind::HattedOpen, mode).map_err(e)?;
            worst = worst.max(matrix_residual(&a, &ah, 2));
        }
        Ok(Outcome::residual(worst).with_detail("A_1 K- - K- Â_1 with K- = 1"))
    }));

    v.extend(negative_controls(spec));
    v
}
