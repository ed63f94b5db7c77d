//! Checks over the symbolic Bäcklund derivations.

use super::{Check, Outcome};
use crate::fockspace::{Boundary, ChainSpec};
use crate::freealg::{
    darboux_space_equations, darboux_time_equations_with, derive_bti, explicit_time_equations, random_word_crosscheck,
    Branch, BtiRecord, Component, EquationSet, MismatchReport,
};
use num_complex::Complex64;
use rand::Rng;
use std::sync::OnceLock;

type Derived = Result<(EquationSet, MismatchReport), String>;

fn space() -> &'static Derived {
    static S: OnceLock<Derived> = OnceLock::new();
    S.get_or_init(|| darboux_space_equations().map_err(|e| e.to_string()))
}

fn bti() -> &'static Result<BtiRecord, String> {
    static S: OnceLock<Result<BtiRecord, String>> = OnceLock::new();
    S.get_or_init(|| derive_bti().map_err(|e| e.to_string()))
}

fn time(branch: Branch, component: Component) -> &'static Derived {
    static PLUS: OnceLock<Derived> = OnceLock::new();
    static MINUS: OnceLock<Derived> = OnceLock::new();
    static MINUS_W: OnceLock<Derived> = OnceLock::new();
    let cell = match (branch, component) {
        (Branch::Plus, _) => &PLUS,
        (Branch::Minus, Component::Printed) => &MINUS,
        (Branch::Minus, Component::Working) => &MINUS_W,
    };
    cell.get_or_init(|| darboux_time_equations_with(branch, component).map_err(|e| e.to_string()))
}

fn summary(r: &MismatchReport) -> String {
    let mut parts: Vec<String> = r.matched.iter().map(|m| format!("{} ~ {} [{}]", m.produced, m.expected, m.scalar)).collect();
    parts.extend(r.near.iter().map(|n| format!("{} ~ {} only with rhs x {}", n.produced, n.expected, n.rhs_factor)));
    parts.extend(r.missing_expected.iter().map(|(l, _)| format!("missing {l}")));
    parts.extend(r.notes.iter().cloned());
    parts.join("; ")
}

fn statics_recovered(r: &MismatchReport) -> bool {
    r.matched.iter().any(|m| m.expected.starts_with("BT*"))
}

fn time_check(name: &str, criterion: u8, branch: Branch, component: Component) -> Check {
    Check::new(name, criterion, 0.0, move |_| {
        let (_, r) = time(branch, component).as_ref().map_err(Clone::clone)?;
        let statics = if statics_recovered(r) { 0.0 } else { 1.0 };
        Ok(Outcome::residual(r.missing_expected.len() as f64 + statics).with_detail(summary(r)))
    })
}

pub fn backlund_checks() -> Vec<Check> {
    let mut v = Vec::new();
    v.push(Check::new("backlund.space", 9, 0.0, |_| {
        let (_, r) = space().as_ref().map_err(Clone::clone)?;
        Ok(Outcome::residual(r.missing_expected.len() as f64).with_detail(summary(r)))
    }));
    v.push(Check::new("backlund.bti.line1", 9, 0.0, |_| {
        let r = bti().as_ref().map_err(Clone::clone)?;
        let exact = r.diff_vs_printed.matched.iter().any(|m| m.expected == "bti.1" && m.scalar == "1");
        Ok(Outcome::residual(if exact { 0.0 } else { 1.0 }).with_detail(format!("line1 = {}", r.line1)))
    }));
    v.push(Check::new("backlund.bti.line2_diff", 9, 0.0, |_| {
        let r = bti().as_ref().map_err(Clone::clone)?;
        let d = &r.diff_vs_printed;
        let matched = d.matched.iter().any(|m| m.expected == "bti.2");
        let diffed = d.missing_expected.iter().any(|(l, _)| l == "bti.2") && d.notes.iter().any(|n| n.starts_with("line2"));
        Ok(Outcome::residual(if matched || diffed { 0.0 } else { 1.0 }).with_detail(d.notes.join("; ")))
    }));
    v.push(time_check("backlund.time.plus", 9, Branch::Plus, Component::Printed));
    v.push(time_check("backlund.time.minus", 9, Branch::Minus, Component::Printed));
    v.push(time_check("backlund.time.minus_working", 0, Branch::Minus, Component::Working));
    v.push(Check::new("backlund.rewriter_oracle", 9, 1e-9, |rng| {
        let spec = ChainSpec::new(2, 8, Complex64::from_polar(1.0, 0.7), Boundary::Periodic);
        let worst = random_word_crosscheck(rng.gen(), 200, &spec).map_err(|e| e.to_string())?;
        Ok(Outcome::residual(worst).with_detail("200 random words, D = 8"))
    }));
    v.push(Check::new("backlund.explicit_time", 0, 0.0, |_| {
        let r = explicit_time_equations();
        Ok(Outcome::residual(0.0).with_detail(format!("resolved = {}: {}", r.resolved, r.reason)))
    }));
    v
}
