//! Regression against committed artifacts. `QLAX_UPDATE_GOLDEN=1` rewrites them.

use qlax_core::fockspace::ChainSpec;
use qlax_core::freealg::{darboux_space_equations, darboux_time_equations, Branch};
use qlax_core::verify::{backlund_checks, bethe_checks, closed_checks, open_checks, qstate_checks, Check};
use std::path::PathBuf;

fn compare(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var("QLAX_UPDATE_GOLDEN").is_ok_and(|v| v == "1") {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    if expected != actual {
        let line = expected.lines().zip(actual.lines()).position(|(a, b)| a != b);
        panic!("{name} drifted (first differing line {line:?})\n--- expected\n{expected}\n--- actual\n{actual}");
    }
}

fn listing(checks: &[Check]) -> String {
    checks.iter().map(|c| format!("{} {} {:e} {:?}\n", c.name, c.criterion, c.tolerance, c.expect)).collect()
}

#[test]
fn space_equations() {
    let (eqs, _) = darboux_space_equations().unwrap();
    compare("space_equations.txt", &eqs.to_text());
}

#[test]
fn time_equations_plus() {
    let (eqs, _) = darboux_time_equations(Branch::Plus).unwrap();
    compare("time_equations_plus.txt", &eqs.to_text());
}

#[test]
fn time_equations_minus() {
    let (eqs, _) = darboux_time_equations(Branch::Minus).unwrap();
    compare("time_equations_minus.txt", &eqs.to_text());
}

#[test]
fn check_lists() {
    let spec = ChainSpec::default_periodic();
    compare("closed_checks.txt", &listing(&closed_checks(&spec)));
    compare("open_checks.txt", &listing(&open_checks(&ChainSpec::default_open())));
    let mut rest = backlund_checks();
    rest.extend(bethe_checks(&spec));
    rest.extend(qstate_checks());
    compare("other_checks.txt", &listing(&rest));
}
