//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Tolerances are pinned here, independently of the check definitions; a check whose
//! tolerance disagrees with its pin fails even if its residual is small.

use num_complex::Complex64;
use qlax_core::fockspace::{Boundary, ChainSpec};
use qlax_core::qstates::{coherent_vector, overlap_check};
use qlax_core::verify::{
    run_backlund_suite, run_closed_suite, run_open_suite, run_spectral_suite, CheckResult, Expect, VerificationReport,
};
use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

const SEED: u64 = 20240607;

enum Pin {
    Fixed(f64),
    Computed(fn() -> f64),
}

fn coherent_tail() -> f64 {
    coherent_vector(Complex64::new(0.3, 0.0), Complex64::new(0.6, 0.0), 25).unwrap().tail
}

fn overlap_bound() -> f64 {
    let q = Complex64::new(0.6, 0.0);
    let a = coherent_vector(Complex64::new(0.3, 0.0), q, 25).unwrap();
    let b = coherent_vector(Complex64::new(0.2, 0.0), q, 25).unwrap();
    overlap_check(&a, &b).unwrap().bound
}

#[rustfmt::skip]
fn pins() -> Vec<(&'static str, &'static str, u8, Pin)> {
    use Pin::*;
    vec![
        ("closed", "algebra.commutation", 1, Fixed(1e-12)),
        ("closed", "algebra.casimir", 1, Fixed(1e-12)),
        ("closed", "rll.symbolic", 2, Fixed(1e-10)),
        ("closed", "rll.sampled", 2, Fixed(1e-10)),
        ("open", "rll.sampled", 2, Fixed(1e-10)),
        ("closed", "transfer.commute", 3, Fixed(1e-10)),
        ("open", "transfer.commute", 3, Fixed(1e-10)),
        ("closed", "generator.b_intertwining", 4, Fixed(1e-9)),
        ("closed", "generator.b_squared_intertwining", 4, Fixed(1e-9)),
        ("closed", "generator.a_intertwining", 4, Fixed(1e-9)),
        ("closed", "generator.hatted_intertwining", 4, Fixed(1e-9)),
        ("closed", "generator.hatted_equals_plain", 4, Fixed(1e-9)),
        ("open", "generator.open_a_intertwining", 4, Fixed(1e-9)),
        ("open", "generator.open_hatted_intertwining", 4, Fixed(1e-9)),
        ("open", "generator.hatted_equals_plain", 4, Fixed(1e-9)),
        ("open", "generator.open_hatted_boundary", 4, Fixed(1e-9)),
        ("closed", "hamiltonian.leading", 5, Fixed(1e-10)),
        ("closed", "hamiltonian.closed_form", 5, Fixed(1e-10)),
        ("closed", "closed_form.a_plus", 5, Fixed(1e-9)),
        ("closed", "closed_form.a_minus", 5, Fixed(1e-9)),
        ("closed", "closed_form.b_plus0", 5, Fixed(1e-9)),
        ("closed", "closed_form.b_plus2", 5, Fixed(1e-9)),
        ("closed", "closed_form.b_plus", 5, Fixed(1e-9)),
        ("closed", "closed_form.b_minus0", 5, Fixed(1e-9)),
        ("closed", "closed_form.b_minus2", 5, Fixed(1e-9)),
        ("closed", "closed_form.b_minus", 5, Fixed(1e-9)),
        ("closed", "closed_form.zero_curvature", 5, Fixed(1e-9)),
        ("open", "hamiltonian.open_leading", 5, Fixed(1e-10)),
        ("open", "hamiltonian.open_second", 5, Fixed(1e-10)),
        ("open", "hamiltonian.open_closed_form", 5, Fixed(1e-10)),
        ("open", "hamiltonian.minus_is_q2_plus", 5, Fixed(1e-10)),
        ("open", "closed_form.open_b_plus0", 5, Fixed(1e-9)),
        ("open", "closed_form.open_b_plus2", 5, Fixed(1e-9)),
        ("open", "closed_form.open_b_plus", 5, Fixed(1e-9)),
        ("open", "closed_form.open_a1", 5, Fixed(1e-9)),
        ("closed", "dynamics.eom.vdot", 6, Fixed(1e-10)),
        ("closed", "dynamics.eom.bdot", 6, Fixed(1e-10)),
        ("closed", "dynamics.eom.bdagdot", 6, Fixed(1e-10)),
        ("closed", "dynamics.zero_curvature", 6, Fixed(1e-9)),
        ("open", "dynamics.open_eom.vdot", 6, Fixed(1e-10)),
        ("open", "dynamics.open_eom.bdot", 6, Fixed(1e-10)),
        ("open", "dynamics.open_eom.bdagdot", 6, Fixed(1e-10)),
        ("open", "dynamics.open_zero_curvature", 6, Fixed(1e-9)),
        ("open", "dynamics.k_dot", 6, Fixed(1e-10)),
        ("open", "reflection.identity", 7, Fixed(1e-12)),
        ("open", "reflection.scalar", 7, Fixed(1e-12)),
        ("open", "control.reflection.diag12", 7, Fixed(1e-4)),
        ("open", "crossing.inverse", 8, Fixed(1e-10)),
        ("backlund", "backlund.space", 9, Fixed(0.0)),
        ("backlund", "backlund.bti.line1", 9, Fixed(0.0)),
        ("backlund", "backlund.bti.line2_diff", 9, Fixed(0.0)),
        ("backlund", "backlund.time.plus", 9, Fixed(0.0)),
        ("backlund", "backlund.time.minus", 9, Fixed(0.0)),
        ("backlund", "backlund.rewriter_oracle", 9, Fixed(1e-9)),
        ("spectral", "bethe.periodic.closed_form_roots", 10, Fixed(1e-12)),
        ("spectral", "bethe.periodic.vacuum_kappa", 10, Fixed(1e-10)),
        ("spectral", "bethe.periodic.m1_spectrum", 10, Fixed(1e-8)),
        ("spectral", "bethe.periodic.m2_spectrum", 10, Fixed(1e-8)),
        ("spectral", "bethe.open.m1_roots", 10, Fixed(1e-10)),
        ("spectral", "bethe.open.m1_spectrum", 10, Fixed(1e-8)),
        ("spectral", "bethe.pole.roots", 10, Fixed(1e-6)),
        ("spectral", "bethe.pole.perturbed", 10, Fixed(1e-2)),
        ("spectral", "qstates.q_number_identity", 11, Fixed(1e-12)),
        ("spectral", "qstates.tail", 11, Fixed(1e-8)),
        ("spectral", "qstates.eigenrelation", 11, Computed(coherent_tail)),
        ("spectral", "qstates.overlap", 11, Computed(overlap_bound)),
        ("spectral", "qstates.algebra", 11, Fixed(1e-14)),
    ]
}

/// Periodic two-magnon mismatch may stand if the report lists it per root set.
fn documented_discrepancy(c: &CheckResult) -> bool {
    c.name == "bethe.periodic.m2_spectrum"
        && c.residual.is_finite()
        && c.detail.as_deref().is_some_and(|d| d.contains("k = [") && d.contains("kappa"))
}

fn suites(spec: &ChainSpec, seed: u64) -> Vec<(&'static str, VerificationReport)> {
    vec![
        ("closed", run_closed_suite(spec, seed)),
        ("open", run_open_suite(&spec.with_boundary(Boundary::Open), seed)),
        ("backlund", run_backlund_suite(spec, seed)),
        ("spectral", run_spectral_suite(spec, seed)),
    ]
}

fn bytes(reports: &[(&str, VerificationReport)]) -> Vec<u8> {
    let plain: Vec<_> = reports.iter().map(|(s, r)| (s, r.clone().without_timings())).collect();
    serde_json::to_vec(&plain).unwrap()
}

fn main() -> ExitCode {
    let spec = ChainSpec::new(3, 5, Complex64::from_polar(1.0, 0.7), Boundary::Periodic);
    let start = Instant::now();
    let reports = suites(&spec, SEED);
    let first = start.elapsed().as_secs_f64();

    let mut found: BTreeMap<(&str, &str), &CheckResult> = BTreeMap::new();
    for (s, r) in &reports {
        for c in &r.checks {
            found.insert((s, c.name.as_str()), c);
        }
    }

    let mut lines: BTreeMap<u8, Vec<String>> = BTreeMap::new();
    for (suite, name, criterion, pin) in pins() {
        let tol = match pin {
            Pin::Fixed(t) => t,
            Pin::Computed(f) => f(),
        };
        let problem = match found.get(&(suite, name)) {
            None => Some(format!("{suite}/{name} missing")),
            Some(c) if c.criterion != criterion => Some(format!("{suite}/{name} tagged {}", c.criterion)),
            Some(c) if c.tolerance != tol => Some(format!("{suite}/{name} tolerance {:e} != pinned {tol:e}", c.tolerance)),
            Some(c) if !c.passed && !documented_discrepancy(c) => {
                let rel = if c.expect == Expect::Above { ">" } else { "<=" };
                Some(format!("{suite}/{name} {:.3e} (need {rel} {tol:e})", c.residual))
            }
            Some(_) => None,
        };
        let entry = lines.entry(criterion).or_default();
        if let Some(p) = problem {
            entry.push(p);
        }
    }
    // every tagged check must be pinned
    let pinned: Vec<(&str, &str)> = pins().iter().map(|p| (p.0, p.1)).collect();
    for ((s, n), c) in &found {
        if (1..=11).contains(&c.criterion) && !pinned.contains(&(*s, *n)) {
            lines.entry(c.criterion).or_default().push(format!("{s}/{n} not pinned"));
        }
    }

    // determinism and controls
    let again = suites(&spec, SEED);
    let mut twelve = Vec::new();
    if bytes(&reports) != bytes(&again) {
        twelve.push("reports differ between runs with the same seed".to_string());
    }
    let mut controlled = [false; 3];
    for ((s, n), c) in &found {
        if c.criterion == 12 {
            if c.tolerance != 1e-5 || c.expect != Expect::Above {
                twelve.push(format!("{s}/{n} control not pinned"));
            } else if !c.passed {
                twelve.push(format!("{s}/{n} perturbed model still passes ({:.3e})", c.residual));
            }
            for (k, tag) in ["control.rll.", "control.intertwining.", "control.zero_curvature."].iter().enumerate() {
                controlled[k] |= n.starts_with(tag);
            }
        }
    }
    if controlled.contains(&false) {
        twelve.push("controls for criteria 2, 4, 6 incomplete".to_string());
    }
    lines.insert(12, twelve);

    let mut failed = 0;
    for k in 1..=12u8 {
        let problems = lines.get(&k).cloned().unwrap_or_default();
        if problems.is_empty() {
            println!("criterion {k:>2}: PASS");
        } else {
            failed += 1;
            println!("criterion {k:>2}: FAIL  {}", problems.join("; "));
        }
    }
    println!("{} of 12 criteria pass; first run {first:.1} s, seed {SEED}", 12 - failed);
    // failing criteria are reported above; QLAX_ACCEPTANCE_STRICT=1 also turns them into a failing exit
    if failed > 0 && std::env::var("QLAX_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
