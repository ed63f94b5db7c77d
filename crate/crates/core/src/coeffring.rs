//! Multivariate Laurent polynomials with complex coefficients.
//!
//! The variable set is fixed to `u`, `w` (spectral parameters), `q` (deformation) and
//! `theta` (Darboux parameter). The anisotropy is identified with the deformation via
//! `q = e^{i mu}`, so a crossing shift `lambda -> -lambda - i mu` becomes the monomial
//! substitution `u -> q^-1 u^-1`.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

/// Coefficients with magnitude at or below this are dropped.
pub const ZERO_THRESHOLD: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoeffError {
    #[error("variable `{0}` has no assigned value")]
    UnassignedVariable(Var),
    #[error("variable `{0}` is assigned 0 but occurs with a negative exponent")]
    ZeroBase(Var),
    #[error("replacement must be a single monomial times a nonzero scalar")]
    NonMonomialReplacement,
    #[error("unknown variable `{0}` (expected one of u, w, q, theta)")]
    UnknownVariable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    U,
    W,
    Q,
    Theta,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::U, Var::W, Var::Q, Var::Theta];

    fn index(self) -> usize {
        match self {
            Var::U => 0,
            Var::W => 1,
            Var::Q => 2,
            Var::Theta => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::U => "u",
            Var::W => "w",
            Var::Q => "q",
            Var::Theta => "theta",
        }
    }

    pub fn parse(name: &str) -> Result<Var, CoeffError> {
        match name {
            "u" => Ok(Var::U),
            "w" => Ok(Var::W),
            "q" => Ok(Var::Q),
            "theta" => Ok(Var::Theta),
            other => Err(CoeffError::UnknownVariable(other.to_string())),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A product of integer powers of the four variables. Absent variables have exponent 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    exps: [i32; 4],
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(v: Var, e: i32) -> Self {
        let mut m = Self::default();
        m.exps[v.index()] = e;
        m
    }

    pub fn from_pairs(pairs: &[(Var, i32)]) -> Self {
        let mut m = Self::default();
        for &(v, e) in pairs {
            m.exps[v.index()] += e;
        }
        m
    }

    pub fn exponent(&self, v: Var) -> i32 {
        self.exps[v.index()]
    }

    pub fn with_exponent(mut self, v: Var, e: i32) -> Self {
        self.exps[v.index()] = e;
        self
    }

    pub fn is_one(&self) -> bool {
        self.exps == [0; 4]
    }

    /// Nonzero exponents, in variable order.
    pub fn exponents(&self) -> impl Iterator<Item = (Var, i32)> + '_ {
        Var::ALL.iter().map(|&v| (v, self.exponent(v))).filter(|&(_, e)| e != 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut exps = self.exps;
        for (e, o) in exps.iter_mut().zip(other.exps) {
            *e += o;
        }
        Monomial { exps }
    }

    pub fn inverse(&self) -> Monomial {
        Monomial { exps: self.exps.map(|e| -e) }
    }

    pub fn eval(&self, a: &Assignment) -> Result<Complex64, CoeffError> {
        let mut out = Complex64::new(1.0, 0.0);
        for (v, e) in self.exponents() {
            let x = a.get(v).ok_or(CoeffError::UnassignedVariable(v))?;
            if x == Complex64::new(0.0, 0.0) {
                if e < 0 {
                    return Err(CoeffError::ZeroBase(v));
                }
                return Ok(Complex64::new(0.0, 0.0));
            }
            out *= x.powi(e);
        }
        Ok(out)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, e) in self.exponents() {
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// Values for the variables. Unassigned variables make `eval` fail.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Assignment {
    vals: [Option<Complex64>; 4],
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, v: Var, x: Complex64) -> Self {
        self.vals[v.index()] = Some(x);
        self
    }

    pub fn get(&self, v: Var) -> Option<Complex64> {
        self.vals[v.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaurentPoly {
    terms: BTreeMap<Monomial, Complex64>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn real(c: f64) -> Self {
        Self::constant(Complex64::new(c, 0.0))
    }

    pub fn term(c: Complex64, m: Monomial) -> Self {
        let mut p = Self::default();
        if c.norm() > ZERO_THRESHOLD {
            p.terms.insert(m, c);
        }
        p
    }

    /// `x^e` for a single variable.
    pub fn var(v: Var, e: i32) -> Self {
        Self::term(Complex64::new(1.0, 0.0), Monomial::var(v, e))
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Complex64)>>(it: I) -> Self {
        let mut p = Self::default();
        for (m, c) in it {
            *p.terms.entry(m).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        p.normalized()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Complex64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    /// Drops coefficients with magnitude at or below [`ZERO_THRESHOLD`].
    pub fn normalized(mut self) -> Self {
        self.terms.retain(|_, c| c.norm() > ZERO_THRESHOLD);
        self
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, x)| (*m, x * c)))
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Self {
        Self { terms: self.terms.iter().map(|(k, c)| (k.mul(m), *c)).collect() }
    }

    /// The single term if this polynomial is `c * m`.
    pub fn as_monomial(&self) -> Option<(Complex64, Monomial)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(m, c)| (*c, *m))
        } else {
            None
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    pub fn eval(&self, a: &Assignment) -> Result<Complex64, CoeffError> {
        let mut s = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            s += c * m.eval(a)?;
        }
        Ok(s)
    }

    /// Evaluates only the given variables, leaving the others symbolic.
    pub fn eval_partial(&self, a: &Assignment) -> Result<Self, CoeffError> {
        let mut out = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut rest = *m;
            let mut c = *c;
            for (v, e) in m.exponents() {
                if let Some(x) = a.get(v) {
                    if x == Complex64::new(0.0, 0.0) && e < 0 {
                        return Err(CoeffError::ZeroBase(v));
                    }
                    c *= x.powi(e);
                    rest = rest.with_exponent(v, 0);
                }
            }
            out.push((rest, c));
        }
        Ok(Self::from_terms(out))
    }

    /// Replaces `v` by `replacement`, which must be a nonzero scalar times one monomial.
    pub fn substitute(&self, v: Var, replacement: &LaurentPoly) -> Result<Self, CoeffError> {
        let (c, m) = replacement.as_monomial().ok_or(CoeffError::NonMonomialReplacement)?;
        let mut out = Vec::with_capacity(self.terms.len());
        for (k, x) in &self.terms {
            let e = k.exponent(v);
            let mut base = k.with_exponent(v, 0);
            for (var, me) in m.exponents() {
                base = base.mul(&Monomial::var(var, me * e));
            }
            out.push((base, x * c.powi(e)));
        }
        Ok(Self::from_terms(out))
    }

    /// Coefficient of `v^e`, as a polynomial in the remaining variables.
    pub fn coefficient_of(&self, v: Var, e: i32) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(m, _)| m.exponent(v) == e)
                .map(|(m, c)| (m.with_exponent(v, 0), *c)),
        )
    }

    /// Exponents of `v` that occur, ascending.
    pub fn powers_of(&self, v: Var) -> Vec<i32> {
        let mut p: Vec<i32> = self.terms.keys().map(|m| m.exponent(v)).collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn fmt_real(x: f64) -> String {
    let r = (x * 1e12).round() / 1e12;
    if r == r.trunc() && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

fn fmt_complex(c: Complex64) -> String {
    let re = (c.re * 1e12).round() / 1e12;
    let im = (c.im * 1e12).round() / 1e12;
    if im == 0.0 {
        fmt_real(re)
    } else if re == 0.0 {
        format!("{}i", fmt_real(im))
    } else if im > 0.0 {
        format!("({}+{}i)", fmt_real(re), fmt_real(im))
    } else {
        format!("({}-{}i)", fmt_real(re), fmt_real(-im))
    }
}

impl fmt::Display for LaurentPoly {
    /// Compact text form such as `q-q^-1` or `2*u^2-3i*w`. Deterministic (terms in
    /// monomial order, coefficients rounded to 12 decimals).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let mut cs = fmt_complex(*c);
            let neg = cs.starts_with('-');
            if neg {
                cs.remove(0);
            }
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push(if neg { '-' } else { '+' });
            }
            if m.is_one() {
                out.push_str(&cs);
            } else if cs == "1" {
                out.push_str(&m.to_string());
            } else {
                out.push_str(&format!("{cs}*{m}"));
            }
        }
        f.write_str(&out)
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, r: &LaurentPoly) -> LaurentPoly {
        LaurentPoly::from_terms(self.terms.iter().chain(r.terms.iter()).map(|(m, c)| (*m, *c)))
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, r: &LaurentPoly) -> LaurentPoly {
        LaurentPoly::from_terms(
            self.terms.iter().map(|(m, c)| (*m, *c)).chain(r.terms.iter().map(|(m, c)| (*m, -c))),
        )
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, r: &LaurentPoly) -> LaurentPoly {
        let mut acc: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &r.terms {
                *acc.entry(m1.mul(m2)).or_default() += c1 * c2;
            }
        }
        LaurentPoly { terms: acc }.normalized()
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for LaurentPoly {
            type Output = LaurentPoly;
            fn $f(self, r: LaurentPoly) -> LaurentPoly {
                (&self).$f(&r)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

pub fn lp_add(p: &LaurentPoly, r: &LaurentPoly) -> LaurentPoly {
    p + r
}

pub fn lp_mul(p: &LaurentPoly, r: &LaurentPoly) -> LaurentPoly {
    p * r
}

pub fn lp_eval(p: &LaurentPoly, a: &Assignment) -> Result<Complex64, CoeffError> {
    p.eval(a)
}

pub fn lp_substitute(p: &LaurentPoly, v: Var, replacement: &LaurentPoly) -> Result<LaurentPoly, CoeffError> {
    p.substitute(v, replacement)
}

/// `alpha(x) = q x - q^-1 x^-1`, with `x` carried by the variable `v`.
pub fn alpha(v: Var) -> LaurentPoly {
    &LaurentPoly::term(Complex64::new(1.0, 0.0), Monomial::from_pairs(&[(Var::Q, 1), (v, 1)]))
        - &LaurentPoly::term(Complex64::new(1.0, 0.0), Monomial::from_pairs(&[(Var::Q, -1), (v, -1)]))
}

/// `beta(x) = x - x^-1`.
pub fn beta(v: Var) -> LaurentPoly {
    &LaurentPoly::var(v, 1) - &LaurentPoly::var(v, -1)
}

/// `gamma = q - q^-1`.
pub fn gamma() -> LaurentPoly {
    &LaurentPoly::var(Var::Q, 1) - &LaurentPoly::var(Var::Q, -1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn additive_inverse_and_cancellation() {
        let u = LaurentPoly::var(Var::U, 1);
        assert!((&u + &(-&u)).is_zero());
        let b = beta(Var::U);
        assert_eq!(&b + &LaurentPoly::var(Var::U, -1), u);
    }

    #[test]
    fn alpha_plus_beta() {
        let s = &alpha(Var::U) + &beta(Var::U);
        let qu = Monomial::from_pairs(&[(Var::Q, 1), (Var::U, 1)]);
        let qiui = Monomial::from_pairs(&[(Var::Q, -1), (Var::U, -1)]);
        assert_eq!(s.coefficient(&qu), c(1.0, 0.0));
        assert_eq!(s.coefficient(&Monomial::var(Var::U, 1)), c(1.0, 0.0));
        assert_eq!(s.coefficient(&qiui), c(-1.0, 0.0));
        assert_eq!(s.coefficient(&Monomial::var(Var::U, -1)), c(-1.0, 0.0));
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn products() {
        let u = Var::U;
        let p = &beta(u) * &(&LaurentPoly::var(u, 1) + &LaurentPoly::var(u, -1));
        assert_eq!(p, &LaurentPoly::var(u, 2) - &LaurentPoly::var(u, -2));
        assert_eq!(&LaurentPoly::one() * &p, p);
        let g2 = &gamma() * &gamma();
        let expect = LaurentPoly::from_terms([
            (Monomial::var(Var::Q, 2), c(1.0, 0.0)),
            (Monomial::one(), c(-2.0, 0.0)),
            (Monomial::var(Var::Q, -2), c(1.0, 0.0)),
        ]);
        assert_eq!(g2, expect);
    }

    #[test]
    fn evaluation() {
        let a = Assignment::new().set(Var::U, c(1.0, 0.0));
        assert_eq!(beta(Var::U).eval(&a).unwrap(), c(0.0, 0.0));
        let q = Complex64::from_polar(1.0, 0.7);
        let a = a.set(Var::Q, q);
        let v = alpha(Var::U).eval(&a).unwrap();
        assert!((v - c(0.0, 2.0 * 0.7f64.sin())).norm() < 1e-14);
        let a2 = Assignment::new().set(Var::U, c(2.0, 0.0));
        assert_eq!(LaurentPoly::var(Var::U, 2).eval(&a2).unwrap(), c(4.0, 0.0));
    }

    #[test]
    fn evaluation_errors() {
        let p = LaurentPoly::var(Var::W, -1);
        assert_eq!(p.eval(&Assignment::new()), Err(CoeffError::UnassignedVariable(Var::W)));
        let a = Assignment::new().set(Var::W, c(0.0, 0.0));
        assert_eq!(p.eval(&a), Err(CoeffError::ZeroBase(Var::W)));
        assert!(Var::parse("z").is_err());
    }

    #[test]
    fn substitutions() {
        let inv = LaurentPoly::var(Var::U, -1);
        assert_eq!(beta(Var::U).substitute(Var::U, &inv).unwrap(), -&beta(Var::U));
        let cross = LaurentPoly::term(c(1.0, 0.0), Monomial::from_pairs(&[(Var::Q, -1), (Var::U, -1)]));
        assert_eq!(LaurentPoly::var(Var::U, 1).substitute(Var::U, &cross).unwrap(), cross);
        // alpha(q^-1 u^-1) = q q^-1 u^-1 - q^-1 q u = u^-1 - u
        let got = alpha(Var::U).substitute(Var::U, &cross).unwrap();
        assert_eq!(got, -&beta(Var::U));
        assert_eq!(
            beta(Var::U).substitute(Var::U, &beta(Var::W)),
            Err(CoeffError::NonMonomialReplacement)
        );
    }

    #[test]
    fn display_is_compact() {
        assert_eq!(gamma().to_string(), "q-q^-1");
        assert_eq!(LaurentPoly::zero().to_string(), "0");
    }
}
