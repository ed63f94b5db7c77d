//! Suite execution and report assembly.

use crate::config::{RunConfig, Suite};
use num_complex::Complex64;
use qlax_core::fockspace::Boundary;
use qlax_core::freealg::{
    darboux_space_equations, darboux_time_equations_with, derive_bti, explicit_time_equations, Branch, BtiRecord,
    Component, EquationSet, ExplicitTimeRecord, MismatchReport,
};
use qlax_core::verify::{
    backlund_checks, bethe_checks, bethe_spectra, closed_checks, open_checks, qstate_checks, rng_for, run_checks, Check,
    SpectrumEntry, VerificationReport,
};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct EquationArtifact {
    pub equations: EquationSet,
    pub comparison: MismatchReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct BacklundArtifacts {
    pub space: Option<EquationArtifact>,
    pub bti: Option<BtiRecord>,
    pub time_plus: Option<EquationArtifact>,
    pub time_minus: Option<EquationArtifact>,
    pub time_minus_working: Option<EquationArtifact>,
    pub explicit_time: ExplicitTimeRecord,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub report: VerificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backlund: Option<BacklundArtifacts>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub spectra: Vec<SpectrumEntry>,
    pub elapsed: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub config: RunConfig,
    pub suites: Vec<SuiteReport>,
    /// `suite/check` to fitted constants.
    pub calibration: BTreeMap<String, Vec<Complex64>>,
    pub elapsed: f64,
    pub overall: bool,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            for c in &s.report.checks {
                out.push_str(&format!(
                    "{} {}/{} residual={:.3e} tol={:.1e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    s.suite.name(),
                    c.name,
                    c.residual,
                    c.tolerance
                ));
                if let Some(cal) = &c.calibration {
                    let cs: Vec<String> = cal.iter().map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect();
                    out.push_str(&format!(" calibration=[{}]", cs.join(", ")));
                }
                out.push('\n');
            }
        }
        let failed: usize = self.suites.iter().map(|s| s.report.failed().count()).sum();
        let total: usize = self.suites.iter().map(|s| s.report.checks.len()).sum();
        out.push_str(&format!(
            "{} ({} of {total} checks failed)\n",
            if self.overall { "OVERALL PASS" } else { "OVERALL FAIL" },
            failed
        ));
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config at `tolerances.{0}`: no such check in the selected suites")]
    UnknownCheck(String),
    #[error("cannot build thread pool: {0}")]
    Pool(String),
}

fn checks_for(suite: Suite, cfg: &RunConfig) -> Vec<Check> {
    let spec = cfg.spec;
    match suite {
        Suite::Closed => closed_checks(&spec.with_boundary(Boundary::Periodic)),
        Suite::Open => open_checks(&spec.with_boundary(Boundary::Open)),
        Suite::Backlund => backlund_checks(),
        Suite::Bethe => bethe_checks(&spec),
        Suite::Qstates => qstate_checks(),
    }
}

fn artifact(r: Result<(EquationSet, MismatchReport), qlax_core::freealg::AlgError>, errors: &mut Vec<String>) -> Option<EquationArtifact> {
    match r {
        Ok((equations, comparison)) => Some(EquationArtifact { equations, comparison }),
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    }
}

fn backlund_artifacts() -> BacklundArtifacts {
    let mut errors = Vec::new();
    let space = artifact(darboux_space_equations(), &mut errors);
    let bti = derive_bti().map_err(|e| errors.push(e.to_string())).ok();
    let time_plus = artifact(darboux_time_equations_with(Branch::Plus, Component::Printed), &mut errors);
    let time_minus = artifact(darboux_time_equations_with(Branch::Minus, Component::Printed), &mut errors);
    let time_minus_working = artifact(darboux_time_equations_with(Branch::Minus, Component::Working), &mut errors);
    BacklundArtifacts { space, bti, time_plus, time_minus, time_minus_working, explicit_time: explicit_time_equations(), errors }
}

fn run_suite(suite: Suite, checks: &[Check], cfg: &RunConfig, deterministic: bool) -> SuiteReport {
    let start = Instant::now();
    let spec = match suite {
        Suite::Open => cfg.spec.with_boundary(Boundary::Open),
        Suite::Closed => cfg.spec.with_boundary(Boundary::Periodic),
        _ => cfg.spec,
    };
    let mut report = VerificationReport::new(spec, cfg.seed, run_checks(checks, cfg.seed));
    let backlund = (suite == Suite::Backlund).then(backlund_artifacts);
    let spectra = if suite == Suite::Bethe {
        bethe_spectra(&cfg.spec, cfg.m_max, &mut rng_for(cfg.seed, "bethe.spectra"))
    } else {
        Vec::new()
    };
    let mut elapsed = start.elapsed().as_secs_f64();
    if deterministic {
        report = report.without_timings();
        elapsed = 0.0;
    }
    let passed = report.overall;
    SuiteReport { suite, report, backlund, spectra, elapsed, passed }
}

/// Runs the selected suites, in parallel on `jobs` threads (`None`: one per core).
pub fn run(cfg: &RunConfig, jobs: Option<usize>, deterministic: bool) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let mut plans: Vec<(Suite, Vec<Check>)> = cfg.suites.iter().map(|&s| (s, checks_for(s, cfg))).collect();
    for (name, tol) in &cfg.tolerances {
        let mut hit = false;
        for (_, checks) in &mut plans {
            for c in checks.iter_mut().filter(|c| &c.name == name) {
                c.tolerance = *tol;
                hit = true;
            }
        }
        if !hit {
            return Err(RunError::UnknownCheck(name.clone()));
        }
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| RunError::Pool(e.to_string()))?;
    let suites: Vec<SuiteReport> =
        pool.install(|| plans.par_iter().map(|(s, checks)| run_suite(*s, checks, cfg, deterministic)).collect());

    let mut calibration = BTreeMap::new();
    for s in &suites {
        for c in &s.report.checks {
            if let Some(cal) = &c.calibration {
                calibration.insert(format!("{}/{}", s.suite.name(), c.name), cal.clone());
            }
        }
    }
    let overall = suites.iter().all(|s| s.passed);
    let generated_at = (!deterministic).then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        generated_at,
        config: cfg.clone(),
        suites,
        calibration,
        elapsed: if deterministic { 0.0 } else { start.elapsed().as_secs_f64() },
        overall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigFile;

    fn cfg(suites: &str) -> RunConfig {
        ConfigFile::parse(&format!(r#"{{"suites": {suites}}}"#)).unwrap().resolve().unwrap()
    }

    #[test]
    fn qstates_suite_passes() {
        let r = run(&cfg(r#"["qstates"]"#), Some(1), true).unwrap();
        assert!(r.overall, "{}", r.summary());
        assert!(r.summary().lines().count() >= 5);
    }

    #[test]
    fn unknown_override_rejected() {
        let mut c = cfg(r#"["qstates"]"#);
        c.tolerances.insert("rll.sampled".into(), 1.0);
        assert!(matches!(run(&c, Some(1), true), Err(RunError::UnknownCheck(_))));
    }

    #[test]
    fn override_changes_the_verdict() {
        let mut c = cfg(r#"["qstates"]"#);
        c.tolerances.insert("qstates.algebra".into(), 0.0);
        let r = run(&c, Some(1), true).unwrap();
        let check = &r.suites[0].report.checks.iter().find(|x| x.name == "qstates.algebra").unwrap();
        assert_eq!(check.tolerance, 0.0);
        assert_eq!(check.passed, check.residual == 0.0);
    }
}
