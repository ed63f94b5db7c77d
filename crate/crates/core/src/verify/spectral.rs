//! Bethe ansatz and q-coherent-state checks.

use super::{Check, Outcome};
use crate::bethe::{
    default_quantum_numbers, i_mu, match_spectrum, match_spectrum_with, periodic_one_magnon, perturbed, pole_residue,
    pole_variation, solve_bae, BetheRootSet, MatchOptions, SectorDynamics,
};
use crate::fockspace::{Boundary, ChainSpec, SparseOperator};
use crate::laxkit::closed_forms::ClosedForms;
use crate::laxkit::LaxModel;
use crate::qstates::{algebra_residual, coherent_vector, eigen_residual, overlap_check, q_number};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

/// `u = e^λ` with `Re λ ∈ [-0.5, 0.5]`, kept 0.05 away from the roots.
fn points(rng: &mut impl Rng, roots: &[Complex64], count: usize) -> Vec<Complex64> {
    let mut out = Vec::new();
    while out.len() < count {
        let l = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.0..PI));
        let clear = roots.iter().all(|r| {
            let d = l - r;
            (d - Complex64::new(0.0, (d.im / PI).round() * PI)).norm() > 0.05
        });
        if clear {
            out.push(l.exp());
        }
    }
    out
}

fn all_roots(sets: &[BetheRootSet]) -> Vec<Complex64> {
    sets.iter().flat_map(|s| s.roots.iter().copied()).collect()
}

fn solve_all(spec: &ChainSpec, m: usize) -> Result<Vec<BetheRootSet>, String> {
    default_quantum_numbers(spec.n, m).iter().map(|k| solve_bae(spec.n, spec.q, spec.boundary, k).map_err(e)).collect()
}

/// Max mismatch over all root sets; optional uniform root shift.
fn spectrum_outcome(spec: &ChainSpec, sets: &[BetheRootSet], rng: &mut impl Rng, shift: Complex64) -> Result<Outcome, String> {
    let shifted: Vec<Complex64> = all_roots(sets).iter().map(|r| r + shift).collect();
    let pts = points(rng, &shifted, 5);
    let mut worst: f64 = 0.0;
    let mut kappa = Complex64::new(0.0, 0.0);
    let mut parts = Vec::new();
    for s in sets {
        let r = match_spectrum_with(spec, s, &pts, MatchOptions { root_shift: shift, ..Default::default() }).map_err(e)?;
        worst = worst.max(r.max_mismatch);
        kappa = r.kappa;
        let ambiguous = r.points.iter().filter(|p| !p.unique).count();
        parts.push(format!("k = {:?}: {:.3e}{}", s.quantum_numbers, r.max_mismatch, if ambiguous > 0 { " (ambiguous)" } else { "" }));
    }
    Ok(Outcome::residual(worst)
        .with_calibration(vec![kappa])
        .with_detail(format!("kappa = {kappa:.6}, root shift = {shift:.6}; {}", parts.join(", "))))
}

fn half_shift(q: Complex64) -> Complex64 {
    -i_mu(q) / 2.0
}

pub fn bethe_checks(spec: &ChainSpec) -> Vec<Check> {
    let per = spec.with_boundary(Boundary::Periodic);
    let open = spec.with_boundary(Boundary::Open);
    let zero = Complex64::new(0.0, 0.0);
    let mut v = Vec::new();

    v.push(Check::new("bethe.periodic.closed_form_roots", 10, 1e-12, move |_| {
        let mut worst: f64 = 0.0;
        for k in 0..per.n as i64 {
            let z = periodic_one_magnon(per.n, per.q, k);
            let lhs = (-1.0 / per.q).powf(per.n as f64) * (2.0 * per.n as f64 * z).exp();
            let set = solve_bae(per.n, per.q, Boundary::Periodic, &[k]).map_err(e)?;
            worst = worst.max((lhs - 1.0).norm()).max(set.residual).max((set.roots[0] - z).norm());
        }
        Ok(Outcome::residual(worst))
    }));
    v.push(Check::new("bethe.periodic.vacuum_kappa", 10, 1e-10, move |rng| {
        let vac = BetheRootSet::vacuum(per.n, per.q, Boundary::Periodic);
        let r = match_spectrum(&per, &vac, &points(rng, &[], 5)).map_err(e)?;
        let expected = per.q.powf(-(per.n as f64) / 2.0);
        Ok(Outcome::residual(r.max_mismatch.max((r.kappa - expected).norm()))
            .with_calibration(vec![r.kappa])
            .with_detail(format!("kappa = {:.6}, q^(-N/2) = {expected:.6}", r.kappa)))
    }));
    v.push(Check::new("bethe.periodic.m1_spectrum", 10, 1e-8, move |rng| spectrum_outcome(&per, &solve_all(&per, 1)?, rng, zero)));
    v.push(Check::new("bethe.periodic.m2_spectrum", 10, 1e-8, move |rng| spectrum_outcome(&per, &solve_all(&per, 2)?, rng, zero)));
    v.push(Check::new("bethe.periodic.m1_spectrum_half_shift", 0, 1e-8, move |rng| {
        spectrum_outcome(&per, &solve_all(&per, 1)?, rng, half_shift(per.q))
    }));
    v.push(Check::new("bethe.periodic.m2_spectrum_half_shift", 0, 1e-8, move |rng| {
        spectrum_outcome(&per, &solve_all(&per, 2)?, rng, half_shift(per.q))
    }));
    v.push(Check::new("bethe.open.m1_roots", 10, 1e-10, move |_| {
        let sets = solve_all(&open, 1)?;
        let worst = sets.iter().map(|s| s.residual).fold(0.0, f64::max);
        let roots: Vec<String> = all_roots(&sets).iter().map(|r| format!("{r:.6}")).collect();
        Ok(Outcome::residual(worst).with_detail(roots.join(", ")))
    }));
    v.push(Check::new("bethe.open.m1_spectrum", 10, 1e-8, move |rng| {
        let out = spectrum_outcome(&open, &solve_all(&open, 1)?, rng, zero)?;
        let vac = BetheRootSet::vacuum(open.n, open.q, Boundary::Open);
        let r = match_spectrum(&open, &vac, &points(rng, &[], 5)).map_err(e)?;
        let d = out.detail.clone().unwrap_or_default();
        Ok(out.with_detail(format!("{d}; vacuum alone mismatches by {:.3e} after the one-point fit", r.max_mismatch)))
    }));
    v.push(Check::new("bethe.pole.roots", 10, 1e-6, move |_| {
        let mut worst: f64 = 0.0;
        let mut literal: f64 = 0.0;
        for s in solve_all(&per, 1)?.iter().chain(solve_all(&per, 2)?.iter()) {
            for k in 0..s.m {
                worst = worst.max(pole_residue(s, k, 1e-3, 32).map_err(e)?);
                literal = literal.max(pole_variation(s, k, 1e-3, 32).map_err(e)?);
            }
        }
        Ok(Outcome::residual(worst).with_detail(format!("contour residue on radius 1e-3; max variation of Λ on the circle {literal:.3e}")))
    }));
    v.push(Check::new("bethe.pole.perturbed", 10, 1e-2, move |_| {
        let mut best = f64::INFINITY;
        for s in solve_all(&per, 1)?.iter().chain(solve_all(&per, 2)?.iter()) {
            for k in 0..s.m {
                let moved = perturbed(s, k, Complex64::new(0.01, 0.0));
                best = best.min(pole_residue(&moved, k, 1e-3, 32).map_err(e)?);
            }
        }
        Ok(Outcome::residual(best))
    })
    .control());
    v.push(Check::new("bethe.pole.roots_half_shift", 0, 1e-6, move |_| {
        let mut worst: f64 = 0.0;
        let mut literal: f64 = 0.0;
        for s in solve_all(&per, 1)?.iter().chain(solve_all(&per, 2)?.iter()) {
            let s = s.shifted(half_shift(per.q));
            for k in 0..s.m {
                worst = worst.max(pole_residue(&s, k, 1e-3, 32).map_err(e)?);
                literal = literal.max(pole_variation(&s, k, 1e-3, 32).map_err(e)?);
            }
        }
        Ok(Outcome::residual(worst).with_detail(format!("max variation of Λ on the circle {literal:.3e}")))
    }));

    // small-sector dynamics
    v.push(Check::new("bethe.evolution.identity", 0, 1e-12, move |rng| {
        let dynm = SectorDynamics::new(&per, 2).map_err(e)?;
        let (qf, qi) = (random_state(&per, 2, rng), random_state(&per, 2, rng));
        let id = SparseOperator::identity(per.d, per.n);
        let base: Complex64 = qf.iter().zip(&qi).map(|(a, b)| a.conj() * b).sum();
        let mut worst: f64 = 0.0;
        for j in 0..=8 {
            let t = 0.25 * j as f64;
            worst = worst.max((dynm.expectation(&id, t, &qf, &qi) - base).norm());
        }
        Ok(Outcome::residual(worst).with_detail("t in [0, 2]"))
    }));
    v.push(Check::new("bethe.evolution.static", 0, 1e-12, move |rng| {
        let dynm = SectorDynamics::new(&per, 2).map_err(e)?;
        let (qf, qi) = (random_state(&per, 2, rng), random_state(&per, 2, rng));
        let model = LaxModel::new(&per).map_err(e)?;
        let b1 = model.ops.b(1);
        let direct: Complex64 = qf.iter().zip(b1.apply(&qi)).map(|(a, b)| a.conj() * b).sum();
        Ok(Outcome::residual((dynm.expectation(b1, 0.0, &qf, &qi) - direct).norm()))
    }));
    v.push(Check::new("bethe.evolution.derivative", 0, 1e-6, move |rng| {
        let dynm = SectorDynamics::new(&per, 2).map_err(e)?;
        let (qf, qi) = (random_state(&per, 2, rng), random_state(&per, 2, rng));
        let model = LaxModel::new(&per).map_err(e)?;
        let bdot = ClosedForms::new(&model.ops).printed_eom(1)[1].clone();
        let b1 = model.ops.b(1);
        let h = 1e-5;
        let fd = (dynm.expectation(b1, h, &qf, &qi) - dynm.expectation(b1, -h, &qf, &qi)) / (2.0 * h);
        let oracle: Complex64 = qf.iter().zip(bdot.apply(&qi)).map(|(a, b)| a.conj() * b).sum::<Complex64>() * Complex64::new(0.0, -1.0);
        Ok(Outcome::residual((fd - oracle).norm()).with_detail("central difference, step 1e-5"))
    }));
    v
}

/// Random state on sectors `<= m_max`, unit norm.
fn random_state(spec: &ChainSpec, m_max: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); spec.dim()];
    for i in crate::fockspace::sectors_up_to(spec, m_max) {
        v[i] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|z| z / n).collect()
}

pub fn qstate_checks() -> Vec<Check> {
    let q = Complex64::new(0.6, 0.0);
    let (z, zp, d) = (Complex64::new(0.3, 0.0), Complex64::new(0.2, 0.0), 25);
    let mut v = Vec::new();
    v.push(Check::new("qstates.q_number_identity", 11, 1e-12, |rng| {
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let q = Complex64::from_polar(rng.gen_range(0.3..1.1), rng.gen_range(0.1..3.0));
            for n in 0..=50 {
                let (a, b) = (q_number(n + 1, q).map_err(e)?, q_number(n, q).map_err(e)?);
                let lhs = a - q * q * b;
                worst = worst.max((lhs - 1.0).norm() / (q * q * b).norm().max(1.0));
            }
        }
        Ok(Outcome::residual(worst).with_detail("n <= 50, 10 random q"))
    }));
    v.push(Check::new("qstates.tail", 11, 1e-8, move |_| {
        let c = coherent_vector(z, q, d).map_err(e)?;
        Ok(Outcome::residual(c.tail).with_detail("q = 0.6, z = 0.3, D = 25"))
    }));
    // tolerances below are the recorded tails themselves
    let tail = coherent_vector(z, q, d).map(|c| c.tail).unwrap_or(0.0);
    v.push(Check::new("qstates.eigenrelation", 11, tail, move |_| {
        let c = coherent_vector(z, q, d).map_err(e)?;
        Ok(Outcome::residual(eigen_residual(&c).map_err(e)?).with_detail(format!("tail {:.3e}", c.tail)))
    }));
    let bound = coherent_vector(z, q, d)
        .and_then(|a| Ok(overlap_check(&a, &coherent_vector(zp, q, d)?)?.bound))
        .unwrap_or(0.0);
    v.push(Check::new("qstates.overlap", 11, bound, move |_| {
        let a = coherent_vector(z, q, d).map_err(e)?;
        let b = coherent_vector(zp, q, d).map_err(e)?;
        let c = overlap_check(&a, &b).map_err(e)?;
        Ok(Outcome::residual(c.difference).with_detail(format!("<z|z'> = {:.15}, exp_q = {:.15}", c.overlap, c.exp_q)))
    }));
    v.push(Check::new("qstates.algebra", 11, 1e-14, move |_| {
        Ok(Outcome::residual(algebra_residual(q, d).map_err(e)?))
    }));
    v
}

/// One solved root set and its spectrum comparison, or why there is none.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectrumEntry {
    pub boundary: Boundary,
    pub m: usize,
    pub quantum_numbers: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub report: Option<crate::bethe::SpectrumReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Spectrum reports for every default root set with `1 <= M <= m_max`, periodic and open.
/// Periodic sets appear twice: as printed and with the half shift applied.
pub fn bethe_spectra(spec: &ChainSpec, m_max: usize, rng: &mut impl Rng) -> Vec<SpectrumEntry> {
    let mut out = Vec::new();
    for boundary in [Boundary::Periodic, Boundary::Open] {
        let s = spec.with_boundary(boundary);
        for m in 1..=m_max {
            for k in default_quantum_numbers(s.n, m) {
                let entry = |report, error| SpectrumEntry { boundary, m, quantum_numbers: k.clone(), report, error };
                let set = match solve_bae(s.n, s.q, boundary, &k) {
                    Ok(set) => set,
                    Err(err) => {
                        out.push(entry(None, Some(err.to_string())));
                        continue;
                    }
                };
                let shifts = if boundary == Boundary::Periodic { vec![Complex64::new(0.0, 0.0), half_shift(s.q)] } else { vec![Complex64::new(0.0, 0.0)] };
                for shift in shifts {
                    let roots: Vec<Complex64> = set.roots.iter().map(|r| r + shift).collect();
                    let pts = points(rng, &roots, 5);
                    match match_spectrum_with(&s, &set, &pts, MatchOptions { root_shift: shift, ..Default::default() }) {
                        Ok(r) => out.push(entry(Some(r), None)),
                        Err(err) => out.push(entry(None, Some(err.to_string()))),
                    }
                }
            }
        }
    }
    out
}
