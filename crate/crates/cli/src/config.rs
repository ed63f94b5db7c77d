//! Run configuration: JSON file, then `QLAX_SEED`, then command-line flags.

use clap::ValueEnum;
use num_complex::Complex64;
use qlax_core::fockspace::{Boundary, ChainSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use thiserror::Error;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUTPUT: &str = "qlax-report.json";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config at `{field}`: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Closed,
    Open,
    Backlund,
    Bethe,
    Qstates,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Closed, Suite::Open, Suite::Backlund, Suite::Bethe, Suite::Qstates];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Closed => "closed",
            Suite::Open => "open",
            Suite::Backlund => "backlund",
            Suite::Bethe => "bethe",
            Suite::Qstates => "qstates",
        }
    }
}

/// `q` as a real number, `{ "phase": p, "modulus": r }` or `{ "re": x, "im": y }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QValue {
    Real(f64),
    Polar(Polar),
    Cartesian(Cartesian),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Polar {
    pub phase: f64,
    #[serde(default = "one")]
    pub modulus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cartesian {
    pub re: f64,
    pub im: f64,
}

fn one() -> f64 {
    1.0
}

impl QValue {
    pub fn complex(self) -> Complex64 {
        match self {
            QValue::Real(x) => Complex64::new(x, 0.0),
            QValue::Polar(p) => Complex64::from_polar(p.modulus, p.phase),
            QValue::Cartesian(c) => Complex64::new(c.re, c.im),
        }
    }
}

/// Everything a config file may set; all optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(alias = "N")]
    pub n: Option<usize>,
    #[serde(alias = "D")]
    pub d: Option<usize>,
    pub q: Option<QValue>,
    pub boundary: Option<Boundary>,
    pub suites: Option<Vec<Suite>>,
    pub seed: Option<u64>,
    #[serde(alias = "M")]
    pub m_max: Option<usize>,
    pub tolerances: Option<BTreeMap<String, f64>>,
    pub output: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn read(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    /// Fields set in `other` win.
    pub fn overlay(mut self, other: ConfigFile) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(n, d, q, boundary, suites, seed, m_max, output);
        if let Some(t) = other.tolerances {
            self.tolerances.get_or_insert_with(BTreeMap::new).extend(t);
        }
        self
    }
}

/// Validated configuration, echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec: ChainSpec,
    pub q_modulus: f64,
    pub q_phase: f64,
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub m_max: usize,
    pub tolerances: BTreeMap<String, f64>,
    /// Not echoed, so reports written to different paths still compare equal.
    #[serde(skip)]
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        ConfigFile::default().resolve().expect("defaults are valid")
    }
}

impl ConfigFile {
    pub fn resolve(self) -> Result<RunConfig, ConfigError> {
        let n = self.n.unwrap_or(3);
        let d = self.d.unwrap_or(5);
        let q = self.q.map(QValue::complex).unwrap_or_else(|| Complex64::from_polar(1.0, 0.7));
        let boundary = self.boundary.unwrap_or(Boundary::Periodic);
        if n < 1 {
            return Err(invalid("n", "must be at least 1"));
        }
        if d < 2 {
            return Err(invalid("d", "must be at least 2"));
        }
        // keep the dense sector work at desk scale
        if (d as f64).powi(n as i32) > 1e6 {
            return Err(invalid("n", format!("D^N = {d}^{n} exceeds 10^6 basis states")));
        }
        let spec = ChainSpec::new(n, d, q, boundary);
        spec.validate().map_err(|e| invalid("q", e.to_string()))?;

        let mut suites = self.suites.unwrap_or_else(|| Suite::ALL.to_vec());
        if suites.is_empty() {
            return Err(invalid("suites", "must name at least one suite"));
        }
        suites.sort();
        suites.dedup();

        let m_max = self.m_max.unwrap_or(2);
        if m_max < 1 || m_max > d - 1 {
            return Err(invalid("m_max", format!("must lie in 1..={}", d - 1)));
        }
        let tolerances = self.tolerances.unwrap_or_default();
        for (k, v) in &tolerances {
            if !v.is_finite() || *v < 0.0 {
                return Err(invalid(format!("tolerances.{k}"), "must be a finite non-negative number"));
            }
        }
        Ok(RunConfig {
            spec,
            q_modulus: q.norm(),
            q_phase: q.arg(),
            suites,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            m_max,
            tolerances,
            output: self.output.unwrap_or_else(|| DEFAULT_OUTPUT.into()),
        })
    }
}

/// Parses `NAME=VALUE`.
pub fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ConfigFile::parse("").unwrap().resolve().unwrap();
        assert_eq!((c.spec.n, c.spec.d, c.seed, c.m_max), (3, 5, 42, 2));
        assert_eq!(c.suites, Suite::ALL.to_vec());
        assert!((c.spec.q - Complex64::from_polar(1.0, 0.7)).norm() < 1e-15);
        assert_eq!(ConfigFile::parse("{}").unwrap(), ConfigFile::default());
    }

    #[test]
    fn q_forms() {
        let c = ConfigFile::parse(r#"{"q": {"phase": 0.7}}"#).unwrap().resolve().unwrap();
        assert_eq!(c.q_modulus, 1.0);
        assert!((c.q_phase - 0.7).abs() < 1e-15);
        let c = ConfigFile::parse(r#"{"q": 0.6}"#).unwrap().resolve().unwrap();
        assert_eq!(c.spec.q, Complex64::new(0.6, 0.0));
        let c = ConfigFile::parse(r#"{"q": {"re": 0.3, "im": 0.4}}"#).unwrap().resolve().unwrap();
        assert_eq!(c.spec.q, Complex64::new(0.3, 0.4));
        assert!(ConfigFile::parse(r#"{"q": {"re": 0.3, "phase": 0.4}}"#).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(ConfigFile::parse(r#"{"n": 3, "depth": 2}"#), Err(ConfigError::Parse(_))));
        assert!(matches!(ConfigFile::parse("{ not json"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn overlay_precedence() {
        let file = ConfigFile::parse(r#"{"N": 3, "seed": 5, "tolerances": {"a": 1.0}}"#).unwrap();
        let flags = ConfigFile { n: Some(4), tolerances: Some([("b".to_string(), 2.0)].into()), ..Default::default() };
        let c = file.overlay(flags).resolve().unwrap();
        assert_eq!((c.spec.n, c.seed), (4, 5));
        assert_eq!(c.tolerances.len(), 2);
    }

    #[test]
    fn validation_names_the_field() {
        let field = |s: &str| match ConfigFile::parse(s).unwrap().resolve() {
            Err(ConfigError::Validation { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field(r#"{"n": 0}"#), "n");
        assert_eq!(field(r#"{"d": 1}"#), "d");
        assert_eq!(field(r#"{"q": 1.0}"#), "q");
        assert_eq!(field(r#"{"suites": []}"#), "suites");
        assert_eq!(field(r#"{"m_max": 5}"#), "m_max");
        assert_eq!(field(r#"{"tolerances": {"rll.sampled": -1}}"#), "tolerances.rll.sampled");
    }

    #[test]
    fn override_syntax() {
        assert_eq!(parse_override("rll.sampled=1e-8").unwrap(), ("rll.sampled".to_string(), 1e-8));
        assert!(parse_override("rll.sampled").is_err());
        assert!(parse_override("x=abc").is_err());
    }
}
