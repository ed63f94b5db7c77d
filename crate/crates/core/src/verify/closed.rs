use super::{fit_linear, fmt_cs, identity_shifts, sample_points, Check, Outcome};
use crate::coeffring::Var;
use crate::fockspace::{safe_residual, Boundary, ChainOps, ChainSpec, SparseOperator};
use crate::laxkit::closed_forms::ClosedForms;
use crate::laxkit::{
    matrix_residual, GeneratorKind, LaurentOperator, LaxModel, OperatorLaurentMatrix, Perturbation, RArg, Spectral,
};
use num_complex::Complex64;
use rand::Rng;

pub(super) fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

pub(super) fn model(spec: &ChainSpec) -> Result<LaxModel, String> {
    LaxModel::new(spec).map_err(e)
}

/// Random admissible unit-modulus `q`.
pub(super) fn random_q(rng: &mut impl Rng, d: usize) -> Complex64 {
    loop {
        let q = Complex64::from_polar(1.0, rng.gen_range(0.15..3.0));
        let spec = ChainSpec::new(1, d, q, Boundary::Periodic);
        if spec.validate().is_ok() {
            return q;
        }
    }
}

/// Local algebra residual over every site pair.
pub(super) fn algebra_residual(ops: &ChainOps) -> Result<f64, String> {
    let q = ops.spec.q;
    let n = ops.spec.n;
    let mut worst: f64 = 0.0;
    let mut acc = |l: &SparseOperator, r: &SparseOperator| -> Result<(), String> {
        worst = worst.max(safe_residual(l, r, 1).map_err(e)?);
        Ok(())
    };
    for i in 1..=n {
        for j in 1..=n {
            let same = i == j;
            let vinv2 = ops.v_inv(i) * ops.v_inv(i);
            let rhs_bb = if same { vinv2.scale(q - 1.0 / q) } else { ops.zero() };
            acc(&ops.b(i).commutator(ops.b_dag(j)), &rhs_bb)?;
            let rhs_bv = if same { (ops.b(i) * ops.v(i)).scale(1.0 - q) } else { ops.zero() };
            acc(&ops.b(i).commutator(ops.v(j)), &rhs_bv)?;
            let rhs_bdv = if same { (ops.b_dag(i) * ops.v(i)).scale(1.0 - 1.0 / q) } else { ops.zero() };
            acc(&ops.b_dag(i).commutator(ops.v(j)), &rhs_bdv)?;
            acc(&ops.b(i).commutator(ops.b(j)), &ops.zero())?;
            acc(&ops.b_dag(i).commutator(ops.b_dag(j)), &ops.zero())?;
            acc(&ops.v(i).commutator(ops.v(j)), &ops.zero())?;
        }
    }
    Ok(worst)
}

pub(super) fn casimir_residual(ops: &ChainOps) -> Result<f64, String> {
    let q = ops.spec.q;
    let mut worst: f64 = 0.0;
    for i in 1..=ops.spec.n {
        let v2 = ops.v(i) * ops.v(i);
        let c1 = &(ops.a_dag(i) * ops.a(i)) + &v2.scale(q);
        let c2 = &(ops.a(i) * ops.a_dag(i)) + &v2.scale(1.0 / q);
        worst = worst.max(safe_residual(&c1, &ops.identity, 1).map_err(e)?);
        worst = worst.max(safe_residual(&c2, &ops.identity, 1).map_err(e)?);
    }
    Ok(worst)
}

pub(super) fn rll_at(m: &LaxModel, mode: Spectral) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for n in 1..=m.spec().n {
        let la = m.l(n, Var::U, mode).map_err(e)?.embed_a();
        let lb = m.l(n, Var::W, mode).map_err(e)?.embed_b();
        let r = m.r(RArg::Ratio, mode);
        worst = worst.max(matrix_residual(&r.mul(&la).mul(&lb), &lb.mul(&la).mul(&r), 2));
    }
    Ok(worst)
}

pub(super) fn rll_sampled(m: &LaxModel, rng: &mut impl Rng, points: usize) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for (u, w) in sample_points(rng, points) {
        worst = worst.max(rll_at(m, Spectral::Point { u, w })?);
    }
    Ok(worst)
}

/// `max |[𝔱(u1), 𝔱(u2)]|` on states with total occupation `<= m_max`.
pub(super) fn transfer_commutator(m: &LaxModel, rng: &mut impl Rng, m_max: usize) -> Result<f64, String> {
    let spec = *m.spec();
    let pts = sample_points(rng, 2);
    let t1 = m.transfer(Spectral::Point { u: pts[0].0, w: pts[0].1 }).map_err(e)?.eval(pts[0].0, pts[0].1);
    let t2 = m.transfer(Spectral::Point { u: pts[1].0, w: pts[1].1 }).map_err(e)?.eval(pts[1].0, pts[1].1);
    let inside: Vec<bool> = (0..spec.dim()).map(|i| spec.occupations(i).iter().sum::<usize>() <= m_max).collect();
    let p12 = &t1 * &t2;
    let c = &p12 - &(&t2 * &t1);
    let num = c
        .entries()
        .into_iter()
        .filter(|(r, col, _)| inside[*r] && inside[*col])
        .map(|(_, _, v)| v.norm())
        .fold(0.0, f64::max);
    Ok(num / 1f64.max(p12.max_abs()))
}

/// `[𝔱, L_bn] - (𝔸_{n+1} L_bn - L_bn 𝔸_n)` over sites `sites` and random points.
pub(super) fn a_intertwining(
    m: &LaxModel,
    kind: GeneratorKind,
    sites: &[usize],
    rng: &mut impl Rng,
    points: usize,
) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for (u, w) in sample_points(rng, points) {
        let mode = Spectral::Point { u, w };
        let t = match kind {
            GeneratorKind::Closed => m.transfer_closed(mode),
            GeneratorKind::Open | GeneratorKind::HattedOpen => m.transfer_open(mode),
            GeneratorKind::HattedClosed => m.transfer_hat(mode),
        }
        .map_err(e)?;
        for &n in sites {
            let hatted = matches!(kind, GeneratorKind::HattedClosed | GeneratorKind::HattedOpen);
            let lb = if hatted { m.hat_l(n, Var::W, mode) } else { m.l(n, Var::W, mode) }.map_err(e)?;
            let lhs = lb.commutator_with(&t);
            let a_n = m.generator_a(n, kind, mode).map_err(e)?;
            let a_next = m.generator_a(n + 1, kind, mode).map_err(e)?;
            let rhs = if hatted { a_n.mul(&lb).sub(&lb.mul(&a_next)) } else { a_next.mul(&lb).sub(&lb.mul(&a_n)) };
            worst = worst.max(matrix_residual(&lhs, &rhs, 2));
        }
    }
    Ok(worst)
}

/// The hatted generator built from `L̂` alone against the plain one at the crossed arguments.
pub(super) fn hatted_equals_plain(m: &LaxModel, rng: &mut impl Rng) -> Result<Outcome, String> {
    let q = m.q();
    let (mut mapped, mut literal): (f64, f64) = (0.0, 0.0);
    for (u, w) in sample_points(rng, 10) {
        for n in 1..=m.spec().n {
            let hat = m.generator_a(n, GeneratorKind::HattedClosed, Spectral::Point { u, w }).map_err(e)?;
            let same = m.generator_a(n, GeneratorKind::Closed, Spectral::Point { u, w }).map_err(e)?;
            let plain = m
                .generator_a(n, GeneratorKind::Closed, Spectral::Point { u: -1.0 / (q * u), w: 1.0 / w })
                .map_err(e)?;
            mapped = mapped.max(matrix_residual(&hat, &plain, 2));
            literal = literal.max(matrix_residual(&hat, &same, 2));
        }
    }
    Ok(Outcome::residual(mapped).with_detail(format!(
        "hatted generator at (u, w) vs plain one at (-1/(qu), 1/w); at identical arguments the residual is {literal:.3e}"
    )))
}

/// `𝔹^k_{n+1} L_bn - L_bn 𝔹^k_n` for `k = 1, 2`.
fn b_intertwining(m: &LaxModel, rng: &mut impl Rng, points: usize, power: u32) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for (u, w) in sample_points(rng, points) {
        let mode = Spectral::Point { u, w };
        for n in 1..=m.spec().n {
            let lb = m.l(n, Var::W, mode).map_err(e)?;
            let pw = |x: OperatorLaurentMatrix| if power == 2 { x.mul(&x) } else { x };
            let b_n = pw(m.generator_b_closed(n, mode).map_err(e)?);
            let b_next = pw(m.generator_b_closed(n + 1, mode).map_err(e)?);
            worst = worst.max(matrix_residual(&b_next.mul(&lb), &lb.mul(&b_n), 2));
        }
    }
    Ok(worst)
}

/// Strict one-scalar fit of `constructed ≈ c · printed`, with a gauge diagnostic that also
/// allows `Σ f_k w^k 1`.
pub(super) fn closed_form_outcome(
    constructed: &[OperatorLaurentMatrix],
    printed: &[OperatorLaurentMatrix],
    id: &SparseOperator,
    r: usize,
) -> Outcome {
    let strict = fit_linear(constructed, &[printed.to_vec()], r);
    let powers = [-2, -1, 0, 1, 2];
    let mut basis = vec![printed.to_vec()];
    for s in identity_shifts(id, &powers) {
        basis.push(vec![s; constructed.len()]);
    }
    let gauge = fit_linear(constructed, &basis, r);
    let shifts: Vec<String> = powers
        .iter()
        .zip(&gauge.coefficients[1..])
        .filter(|(_, c)| c.norm() > 1e-9)
        .map(|(k, c)| format!("{}·w^{k}", fmt_cs(&[*c])))
        .collect();
    Outcome::residual(strict.residual).with_calibration(strict.coefficients.clone()).with_detail(format!(
        "scalar {}; with identity shift: scalar {}, shift [{}], residual {:.3e}",
        fmt_cs(&strict.coefficients),
        fmt_cs(&gauge.coefficients[..1]),
        shifts.join(", "),
        gauge.residual
    ))
}

fn constant_olm(op: &SparseOperator) -> OperatorLaurentMatrix {
    OperatorLaurentMatrix::from_entries(1, 1, vec![LaurentOperator::constant(op.clone())])
}

/// One-scalar fit of two operators.
pub(super) fn operator_fit(constructed: &SparseOperator, printed: &SparseOperator, r: usize) -> Outcome {
    let f = fit_linear(&[constant_olm(constructed)], &[vec![constant_olm(printed)]], r);
    Outcome::residual(f.residual).with_calibration(f.coefficients.clone()).with_detail(format!("scalar {}", fmt_cs(&f.coefficients)))
}

/// `[H, L_n(w)]` and `𝒜_{n+1} L_n - L_n 𝒜_n` for each generator family, over sites `sites`.
pub(super) fn zero_curvature_pieces(
    m: &LaxModel,
    h: &SparseOperator,
    families: &[&dyn Fn(usize) -> Result<OperatorLaurentMatrix, String>],
    sites: &[usize],
) -> Result<(Vec<OperatorLaurentMatrix>, Vec<Vec<OperatorLaurentMatrix>>), String> {
    let hl = LaurentOperator::constant(h.clone());
    let mut target = Vec::new();
    let mut basis = vec![Vec::new(); families.len()];
    for &n in sites {
        let l = m.l(n, Var::W, Spectral::Symbolic).map_err(e)?;
        target.push(l.commutator_with(&hl));
        for (k, f) in families.iter().enumerate() {
            let next = if m.spec().boundary == Boundary::Periodic { m.ops.wrap(n as i64 + 1) } else { n + 1 };
            basis[k].push(f(next)?.mul(&l).sub(&l.mul(&f(n)?)));
        }
    }
    Ok((target, basis))
}

pub fn closed_checks(spec: &ChainSpec) -> Vec<Check> {
    let spec = *spec;
    let mut v = vec![Check::new("spec", 0, 0.0, move |_| spec.validate().map(|_| Outcome::residual(0.0)).map_err(e))];

    v.push(Check::new("algebra.commutation", 1, 1e-12, move |rng| {
        let mut worst: f64 = 0.0;
        let mut qs = Vec::new();
        for _ in 0..10 {
            let q = random_q(rng, spec.d);
            qs.push(q);
            let ops = ChainOps::new(&ChainSpec { q, ..spec }).map_err(e)?;
            worst = worst.max(algebra_residual(&ops)?);
        }
        Ok(Outcome::residual(worst).with_detail(format!("q samples: {}", fmt_cs(&qs))))
    }));
    v.push(Check::new("algebra.casimir", 1, 1e-12, move |rng| {
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let q = random_q(rng, spec.d);
            let ops = ChainOps::new(&ChainSpec { q, ..spec }).map_err(e)?;
            worst = worst.max(casimir_residual(&ops)?);
        }
        Ok(Outcome::residual(worst))
    }));
    v.push(Check::new("rll.symbolic", 2, 1e-10, move |_| {
        let m = model(&ChainSpec { n: 1, ..spec })?;
        rll_at(&m, Spectral::Symbolic).map(Outcome::residual)
    }));
    v.push(Check::new("rll.sampled", 2, 1e-10, move |rng| rll_sampled(&model(&spec)?, rng, 20).map(Outcome::residual)));
    v.push(Check::new("transfer.commute", 3, 1e-10, move |rng| {
        transfer_commutator(&model(&spec)?, rng, 3).map(Outcome::residual)
    }));

    let all_sites: Vec<usize> = (1..=spec.n).collect();
    v.push(Check::new("generator.b_intertwining", 4, 1e-9, move |rng| {
        b_intertwining(&model(&spec)?, rng, 10, 1).map(Outcome::residual)
    }));
    v.push(Check::new("generator.b_squared_intertwining", 4, 1e-9, move |rng| {
        b_intertwining(&model(&spec)?, rng, 10, 2).map(Outcome::residual)
    }));
    let s = all_sites.clone();
    v.push(Check::new("generator.a_intertwining", 4, 1e-9, move |rng| {
        a_intertwining(&model(&spec)?, GeneratorKind::Closed, &s, rng, 10).map(Outcome::residual)
    }));
    let s = all_sites.clone();
    v.push(Check::new("generator.hatted_intertwining", 4, 1e-9, move |rng| {
        a_intertwining(&model(&spec)?, GeneratorKind::HattedClosed, &s, rng, 10).map(Outcome::residual)
    }));
    v.push(Check::new("generator.hatted_equals_plain", 4, 1e-9, move |rng| hatted_equals_plain(&model(&spec)?, rng)));

    // Hamiltonians and closed forms
    v.push(Check::new("hamiltonian.leading", 5, 1e-10, move |_| {
        let m = model(&spec)?;
        let h = m.extract_hamiltonians().map_err(e)?;
        let cf = ClosedForms::new(&m.ops);
        let vp = cf.v_product();
        let p = operator_fit(&h.h_plus0, &vp, 0);
        let mm = operator_fit(&h.h_minus0, &vp, 0);
        let odd = h.h_plus1.max_abs().max(h.h_minus1.max_abs());
        let mut cal = p.calibration.clone().unwrap_or_default();
        cal.extend(mm.calibration.clone().unwrap_or_default());
        Ok(Outcome::residual(p.residual.max(mm.residual).max(odd))
            .with_calibration(cal)
            .with_detail(format!("H(+,0) and H(-,0) as multiples of v_N..v_1; |H(±,1)| = {odd:.3e}")))
    }));
    v.push(Check::new("hamiltonian.closed_form", 5, 1e-10, move |_| {
        let m = model(&spec)?;
        let h = m.extract_hamiltonians().map_err(e)?;
        let cf = ClosedForms::new(&m.ops);
        let r = safe_residual(&h.h_plus, &cf.h_plus(), 2)
            .map_err(e)?
            .max(safe_residual(&h.h_minus, &cf.h_minus(), 2).map_err(e)?);
        Ok(Outcome::residual(r))
    }));

    type Printed = fn(&ClosedForms, usize) -> OperatorLaurentMatrix;
    let a_forms: [(&str, bool, Printed, u8); 3] = [
        ("closed_form.a_plus", true, |c, n| c.printed_a_plus(n), 5),
        ("closed_form.a_minus", false, |c, n| c.printed_a_minus(n), 5),
        ("closed_form.a_minus_working", false, |c, n| c.working_a_minus(n), 0),
    ];
    for (name, plus, printed, crit) in a_forms {
        v.push(Check::new(name, crit, 1e-9, move |_| {
            let m = model(&spec)?;
            let h = m.extract_hamiltonians().map_err(e)?;
            let cf = ClosedForms::new(&m.ops);
            let mut con = Vec::new();
            let mut pr = Vec::new();
            for n in 1..=spec.n {
                con.push(m.expanded_generator(n, plus, &h).map_err(e)?);
                pr.push(printed(&cf, n));
            }
            Ok(closed_form_outcome(&con, &pr, &m.ops.identity, 2))
        }));
    }

    let b_forms: [(&str, bool, usize, Printed); 6] = [
        ("closed_form.b_plus0", true, 0, |c, _| c.printed_b_plus0()),
        ("closed_form.b_plus2", true, 1, |c, n| c.printed_b_plus2(n)),
        ("closed_form.b_plus", true, 2, |c, n| c.printed_b_plus(n)),
        ("closed_form.b_minus0", false, 0, |c, _| c.printed_b_minus0()),
        ("closed_form.b_minus2", false, 1, |c, n| c.printed_b_minus2(n)),
        ("closed_form.b_minus", false, 2, |c, n| c.printed_b_minus(n)),
    ];
    for (name, plus, which, printed) in b_forms {
        v.push(Check::new(name, 5, 1e-9, move |_| {
            let m = model(&spec)?;
            let cf = ClosedForms::new(&m.ops);
            let mut con = Vec::new();
            let mut pr = Vec::new();
            for n in 1..=spec.n {
                let b = m.generator_b_closed(n, Spectral::Symbolic).map_err(e)?;
                let parts = m.normalized_b(&b, plus).map_err(e)?;
                con.push([parts.0, parts.1, parts.2][which].clone());
                pr.push(printed(&cf, n));
            }
            Ok(closed_form_outcome(&con, &pr, &m.ops.identity, 2))
        }));
    }

    v.push(Check::new("closed_form.zero_curvature", 5, 1e-9, move |_| {
        let m = model(&spec)?;
        let h = m.extract_hamiltonians().map_err(e)?;
        let cf = ClosedForms::new(&m.ops);
        let q = spec.q;
        let ap = |n: usize| Ok(cf.printed_a_plus(n).scale(q));
        let am = |n: usize| Ok(cf.printed_a_minus(n).scale(1.0 / q));
        let (t, b) = zero_curvature_pieces(&m, &h.h_phys, &[&ap, &am], &all_sites)?;
        let f = fit_linear(&t, &b, 3);
        Ok(Outcome::residual(f.residual)
            .with_calibration(f.coefficients.clone())
            .with_detail(format!("(c+, c-) = ({})", fmt_cs(&f.coefficients))))
    }));
    let s = (1..=spec.n).collect::<Vec<_>>();
    v.push(Check::new("closed_form.zero_curvature_working", 0, 1e-9, move |_| {
        let m = model(&spec)?;
        let h = m.extract_hamiltonians().map_err(e)?;
        let cf = ClosedForms::new(&m.ops);
        let q = spec.q;
        let ap = |n: usize| Ok(cf.printed_a_plus(n).scale(q));
        let am = |n: usize| Ok(cf.working_a_minus(n).scale(1.0 / q));
        let (t, b) = zero_curvature_pieces(&m, &h.h_phys, &[&ap, &am], &s)?;
        let f = fit_linear(&t, &b, 3);
        Ok(Outcome::residual(f.residual)
            .with_calibration(f.coefficients.clone())
            .with_detail(format!("(c+, c-) = ({})", fmt_cs(&f.coefficients))))
    }));

    // dynamics
    let eoms = ["dynamics.eom.vdot", "dynamics.eom.bdot", "dynamics.eom.bdagdot"];
    for (k, name) in eoms.into_iter().enumerate() {
        v.push(Check::new(name, 6, 1e-10, move |_| {
            let m = model(&spec)?;
            let h = m.extract_hamiltonians().map_err(e)?;
            let cf = ClosedForms::new(&m.ops);
            let mut worst: f64 = 0.0;
            for n in 1..=spec.n {
                let x = [m.ops.v(n), m.ops.b(n), m.ops.b_dag(n)][k];
                let lhs = h.h_phys.commutator(x);
                worst = worst.max(safe_residual(&lhs, &cf.printed_eom(n)[k], 2).map_err(e)?);
            }
            Ok(Outcome::residual(worst))
        }));
    }
    v.push(Check::new("dynamics.eom.vdot_working", 0, 1e-10, move |_| {
        let m = model(&spec)?;
        let h = m.extract_hamiltonians().map_err(e)?;
        let cf = ClosedForms::new(&m.ops);
        let mut worst: f64 = 0.0;
        for n in 1..=spec.n {
            worst = worst.max(safe_residual(&h.h_phys.commutator(m.ops.v(n)), &cf.working_vdot(n), 2).map_err(e)?);
        }
        Ok(Outcome::residual(worst))
    }));
    let s = (1..=spec.n).collect::<Vec<_>>();
    v.push(Check::new("dynamics.zero_curvature", 6, 1e-9, move |_| {
        zero_curvature_constructed(&model(&spec)?, &s).map(Outcome::residual)
    }));

    v.extend(negative_controls(spec));
    v
}

/// `[H, L_n] = 𝒜_{n+1} L_n - L_n 𝒜_n` with the generators expanded from `𝔹` and fixed weights
/// (`q𝔸^+ + q^-1𝔸^-` periodic, `𝔸^+` open).
pub(super) fn zero_curvature_constructed(m: &LaxModel, sites: &[usize]) -> Result<f64, String> {
    let h = m.extract_hamiltonians().map_err(e)?;
    let q = m.q();
    let gen = |n: usize| -> Result<OperatorLaurentMatrix, String> {
        match m.spec().boundary {
            Boundary::Periodic => {
                let p = m.expanded_generator(n, true, &h).map_err(e)?.scale(q);
                let mm = m.expanded_generator(n, false, &h).map_err(e)?.scale(1.0 / q);
                Ok(p.add(&mm))
            }
            Boundary::Open => m.expanded_generator(n, true, &h).map_err(e),
        }
    };
    let (t, b) = zero_curvature_pieces(m, &h.h_phys, &[&gen], sites)?;
    let mut worst: f64 = 0.0;
    for (x, y) in t.iter().zip(&b[0]) {
        worst = worst.max(matrix_residual(x, y, 3));
    }
    Ok(worst)
}

pub(super) fn negative_controls(spec: ChainSpec) -> Vec<Check> {
    let mut v = Vec::new();
    for entry in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let pert = Perturbation { entry, eps: 1e-3 };
        let tag = format!("{}{}", entry.0 + 1, entry.1 + 1);
        v.push(
            Check::new(format!("control.rll.L{tag}"), 12, 1e-5, move |rng| {
                rll_sampled(&model(&spec)?.with_perturbation(pert), rng, 20).map(Outcome::residual)
            })
            .control(),
        );
        let kind = if spec.boundary == Boundary::Periodic { GeneratorKind::Closed } else { GeneratorKind::Open };
        let sites: Vec<usize> = if spec.boundary == Boundary::Periodic { (1..=spec.n).collect() } else { (2..spec.n).collect() };
        let s = sites.clone();
        v.push(
            Check::new(format!("control.intertwining.L{tag}"), 12, 1e-5, move |rng| {
                a_intertwining(&model(&spec)?.with_perturbation(pert), kind, &s, rng, 10).map(Outcome::residual)
            })
            .control(),
        );
        let s: Vec<usize> = if spec.boundary == Boundary::Periodic { (1..=spec.n).collect() } else { (1..spec.n).collect() };
        v.push(
            Check::new(format!("control.zero_curvature.L{tag}"), 12, 1e-5, move |_| {
                zero_curvature_constructed(&model(&spec)?.with_perturbation(pert), &s).map(Outcome::residual)
            })
            .control(),
        );
    }
    v
}
