//! Free noncommutative algebra over `LaurentPoly` scalars: q-oscillator normal ordering,
//! opaque Darboux symbols and the Bäcklund derivations built on top of them.

use crate::coeffring::{Assignment, CoeffError, LaurentPoly, Var};
use crate::fockspace::{safe_residual, Boundary, ChainOps, ChainSpec, FockError, SparseOperator};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub mod backlund;

pub use backlund::{
    darboux_space_equations, darboux_time_equations, darboux_time_equations_with, derive_bti, explicit_time_equations, Branch, BtiRecord, Component, ExplicitTimeRecord,
    MatchEntry, MismatchReport,
};

/// Rewrites allowed per `normal_order` call before giving up.
pub const STEP_LIMIT: usize = 200_000;

#[derive(Debug, Error)]
pub enum AlgError {
    #[error("unsupported species {0} in a field-only operation")]
    UnsupportedSpecies(String),
    #[error("rewrite step limit ({0}) exceeded")]
    StepLimit(usize),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Fock(#[from] FockError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Species {
    V,
    VInv,
    BDag,
    B,
    A,
    AInv,
    X,
    Y,
    XDot,
    YDot,
    ADot,
    AInvDot,
}

impl Species {
    pub fn is_field(self) -> bool {
        matches!(self, Species::V | Species::VInv | Species::BDag | Species::B)
    }

    pub fn name(self) -> &'static str {
        match self {
            Species::V => "v",
            Species::VInv => "vinv",
            Species::BDag => "bdag",
            Species::B => "b",
            Species::A => "A",
            Species::AInv => "Ainv",
            Species::X => "X",
            Species::Y => "Y",
            Species::XDot => "Xdot",
            Species::YDot => "Ydot",
            Species::ADot => "Adot",
            Species::AInvDot => "Ainvdot",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GenSymbol {
    pub species: Species,
    pub site: i32,
    pub tilde: bool,
}

impl GenSymbol {
    pub fn new(species: Species, site: i32, tilde: bool) -> Self {
        // Darboux symbols never carry the tilde flag.
        GenSymbol { species, site, tilde: tilde && species.is_field() }
    }
    pub fn v(n: i32) -> Self {
        Self::new(Species::V, n, false)
    }
    pub fn v_inv(n: i32) -> Self {
        Self::new(Species::VInv, n, false)
    }
    pub fn b(n: i32) -> Self {
        Self::new(Species::B, n, false)
    }
    pub fn b_dag(n: i32) -> Self {
        Self::new(Species::BDag, n, false)
    }
    pub fn a(n: i32) -> Self {
        Self::new(Species::A, n, false)
    }
    pub fn a_inv(n: i32) -> Self {
        Self::new(Species::AInv, n, false)
    }
    pub fn x(n: i32) -> Self {
        Self::new(Species::X, n, false)
    }
    pub fn y(n: i32) -> Self {
        Self::new(Species::Y, n, false)
    }
    pub fn tilde(self) -> Self {
        Self::new(self.species, self.site, true)
    }
    pub fn is_field(&self) -> bool {
        self.species.is_field()
    }

    fn block(&self) -> (i32, bool) {
        (self.site, self.tilde)
    }
}

impl fmt::Display for GenSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tilde {
            f.write_str("~")?;
        }
        write!(f, "{}[{}]", self.species.name(), self.site)
    }
}

pub type Word = Vec<GenSymbol>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NCExpr {
    terms: BTreeMap<Word, LaurentPoly>,
}

impl NCExpr {
    pub fn zero() -> Self {
        NCExpr::default()
    }
    pub fn one() -> Self {
        Self::scalar(LaurentPoly::one())
    }
    pub fn scalar(c: LaurentPoly) -> Self {
        Self::term(c, Vec::new())
    }
    pub fn term(c: LaurentPoly, w: Word) -> Self {
        let mut e = NCExpr::zero();
        e.push(w, c);
        e
    }
    pub fn sym(g: GenSymbol) -> Self {
        Self::term(LaurentPoly::one(), vec![g])
    }
    pub fn word(w: &[GenSymbol]) -> Self {
        Self::term(LaurentPoly::one(), w.to_vec())
    }

    fn push(&mut self, w: Word, c: LaurentPoly) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(w).or_insert_with(LaurentPoly::zero);
        *slot = &*slot + &c;
        self.terms.retain(|_, c| !c.is_zero());
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, LaurentPoly)>>(it: I) -> Self {
        let mut acc: BTreeMap<Word, LaurentPoly> = BTreeMap::new();
        for (w, c) in it {
            let slot = acc.entry(w).or_insert_with(LaurentPoly::zero);
            *slot = &*slot + &c;
        }
        acc.retain(|_, c| !c.is_zero());
        NCExpr { terms: acc }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &LaurentPoly)> {
        self.terms.iter()
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn coefficient(&self, w: &[GenSymbol]) -> LaurentPoly {
        self.terms.get(w).cloned().unwrap_or_else(LaurentPoly::zero)
    }

    pub fn add(&self, o: &NCExpr) -> NCExpr {
        Self::from_terms(self.terms.iter().chain(o.terms.iter()).map(|(w, c)| (w.clone(), c.clone())))
    }
    pub fn sub(&self, o: &NCExpr) -> NCExpr {
        self.add(&o.neg())
    }
    pub fn neg(&self) -> NCExpr {
        self.scale(&LaurentPoly::real(-1.0))
    }
    pub fn scale(&self, c: &LaurentPoly) -> NCExpr {
        Self::from_terms(self.terms.iter().map(|(w, k)| (w.clone(), k * c)))
    }
    pub fn mul(&self, o: &NCExpr) -> NCExpr {
        let mut out = Vec::with_capacity(self.len() * o.len());
        for (w1, c1) in &self.terms {
            for (w2, c2) in &o.terms {
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                out.push((w, c1 * c2));
            }
        }
        Self::from_terms(out)
    }
    pub fn product(factors: &[NCExpr]) -> NCExpr {
        factors.iter().fold(NCExpr::one(), |acc, f| acc.mul(f))
    }

    /// Coefficient of `var^power` in every scalar, keeping the words.
    pub fn coefficient_of(&self, var: Var, power: i32) -> NCExpr {
        Self::from_terms(self.terms.iter().map(|(w, c)| (w.clone(), c.coefficient_of(var, power))))
    }

    pub fn powers_of(&self, var: Var) -> Vec<i32> {
        let mut p: Vec<i32> = self.terms.values().flat_map(|c| c.powers_of(var)).collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    pub fn substitute_var(&self, var: Var, by: &LaurentPoly) -> Result<NCExpr, AlgError> {
        let mut out = Vec::new();
        for (w, c) in &self.terms {
            out.push((w.clone(), c.substitute(var, by)?));
        }
        Ok(Self::from_terms(out))
    }

    /// Replaces every occurrence of the generator `g` by `by`.
    pub fn substitute_symbol(&self, g: GenSymbol, by: &NCExpr) -> NCExpr {
        let mut acc = NCExpr::zero();
        for (w, c) in &self.terms {
            let factors: Vec<NCExpr> =
                w.iter().map(|s| if *s == g { by.clone() } else { NCExpr::sym(*s) }).collect();
            acc = acc.add(&NCExpr::product(&factors).scale(c));
        }
        acc
    }

    /// Replaces the leftmost occurrence of the contiguous subword `pattern` in each term,
    /// repeating until none is left.
    pub fn rewrite(&self, pattern: &[GenSymbol], by: &NCExpr) -> Result<NCExpr, AlgError> {
        let mut cur = self.clone();
        for _ in 0..STEP_LIMIT {
            let mut changed = false;
            let mut out = Vec::new();
            for (w, c) in &cur.terms {
                match find_subword(w, pattern) {
                    Some(i) => {
                        changed = true;
                        let left = NCExpr::word(&w[..i]);
                        let right = NCExpr::word(&w[i + pattern.len()..]);
                        for (nw, nc) in NCExpr::product(&[left, by.clone(), right]).terms {
                            out.push((nw, &nc * c));
                        }
                    }
                    None => out.push((w.clone(), c.clone())),
                }
            }
            cur = NCExpr::from_terms(out);
            if !changed {
                return Ok(cur);
            }
        }
        Err(AlgError::StepLimit(STEP_LIMIT))
    }

    pub fn is_field_only(&self) -> bool {
        self.terms.keys().all(|w| w.iter().all(|g| g.is_field()))
    }

    pub fn contains_species(&self, pred: impl Fn(Species) -> bool) -> bool {
        self.terms.keys().any(|w| w.iter().any(|g| pred(g.species)))
    }

    /// Largest coefficient modulus over all terms and monomials.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.max_abs_coefficient()).fold(0.0, f64::max)
    }

    /// Drops scalars whose coefficients are all below `tol`.
    pub fn pruned(&self, tol: f64) -> NCExpr {
        let mut out = Vec::new();
        for (w, c) in &self.terms {
            let kept = LaurentPoly::from_terms(c.terms().filter(|(_, k)| k.norm() > tol).map(|(m, k)| (*m, *k)));
            out.push((w.clone(), kept));
        }
        Self::from_terms(out)
    }
}

fn find_subword(w: &[GenSymbol], p: &[GenSymbol]) -> Option<usize> {
    if p.is_empty() || p.len() > w.len() {
        return None;
    }
    (0..=w.len() - p.len()).find(|&i| w[i..i + p.len()] == *p)
}

fn q_pow(e: i32) -> LaurentPoly {
    LaurentPoly::var(Var::Q, e)
}

/// `(q - q^-1)`, the commutator scale of the oscillator algebra.
pub fn q_gap() -> LaurentPoly {
    &q_pow(1) - &q_pow(-1)
}

/// One rewrite of the adjacent pair `(x, y)`, if the pair is not in normal order.
fn reduce_pair(x: GenSymbol, y: GenSymbol) -> Option<Vec<(Word, LaurentPoly)>> {
    use Species::*;
    if x.block() != y.block() {
        return (x.block() > y.block()).then(|| vec![(vec![y, x], LaurentPoly::one())]);
    }
    let vi = GenSymbol { species: VInv, ..x };
    match (x.species, y.species) {
        (V, VInv) | (VInv, V) => Some(vec![(Vec::new(), LaurentPoly::one())]),
        (B, V) => Some(vec![(vec![y, x], q_pow(-1))]),
        (B, VInv) => Some(vec![(vec![y, x], q_pow(1))]),
        (BDag, V) => Some(vec![(vec![y, x], q_pow(1))]),
        (BDag, VInv) => Some(vec![(vec![y, x], q_pow(-1))]),
        (B, BDag) => Some(vec![(vec![y, x], LaurentPoly::one()), (vec![vi, vi], q_gap())]),
        _ => None,
    }
}

fn normal_order_word(w: Word, c: LaurentPoly, out: &mut Vec<(Word, LaurentPoly)>, steps: &mut usize) -> Result<(), AlgError> {
    let mut stack = vec![(w, c)];
    while let Some((w, c)) = stack.pop() {
        let hit = (0..w.len().saturating_sub(1)).find_map(|i| reduce_pair(w[i], w[i + 1]).map(|r| (i, r)));
        match hit {
            None => out.push((w, c)),
            Some((i, reps)) => {
                *steps += 1;
                if *steps > STEP_LIMIT {
                    return Err(AlgError::StepLimit(STEP_LIMIT));
                }
                for (mid, k) in reps {
                    let mut nw = w[..i].to_vec();
                    nw.extend(mid);
                    nw.extend_from_slice(&w[i + 2..]);
                    stack.push((nw, &c * &k));
                }
            }
        }
    }
    Ok(())
}

/// Normal form of a field-only expression: per block `(site, tilde)` ascending, a power of
/// `v` or `v_inv`, then `b_dag`s, then `b`s.
pub fn normal_order(e: &NCExpr) -> Result<NCExpr, AlgError> {
    if let Some(g) = e.terms.keys().flatten().find(|g| !g.is_field()) {
        return Err(AlgError::UnsupportedSpecies(g.to_string()));
    }
    let mut out = Vec::new();
    let mut steps = 0;
    for (w, c) in &e.terms {
        normal_order_word(w.clone(), c.clone(), &mut out, &mut steps)?;
    }
    Ok(NCExpr::from_terms(out))
}

/// Cancels adjacent `A_n A_n^-1` pairs (either order).
fn cancel_darboux(w: &[GenSymbol]) -> Word {
    let mut out: Word = Vec::with_capacity(w.len());
    for &g in w {
        if let Some(&last) = out.last() {
            let inverse = matches!(
                (last.species, g.species),
                (Species::A, Species::AInv) | (Species::AInv, Species::A)
            );
            if inverse && last.site == g.site {
                out.pop();
                continue;
            }
        }
        out.push(g);
    }
    out
}

fn canonicalize_once(e: &NCExpr) -> Result<NCExpr, AlgError> {
    let mut out = Vec::new();
    let mut steps = 0;
    for (w, c) in &e.terms {
        let w = cancel_darboux(w);
        // Field runs are normal ordered in place; opaque symbols stay put.
        let mut partial = vec![(Vec::new(), c.clone())];
        let mut run: Word = Vec::new();
        let flush = |run: &mut Word, partial: &mut Vec<(Word, LaurentPoly)>, steps: &mut usize| -> Result<(), AlgError> {
            if run.is_empty() {
                return Ok(());
            }
            let mut ordered = Vec::new();
            normal_order_word(std::mem::take(run), LaurentPoly::one(), &mut ordered, steps)?;
            let mut next = Vec::new();
            for (pw, pc) in partial.iter() {
                for (ow, oc) in &ordered {
                    let mut nw = pw.clone();
                    nw.extend_from_slice(ow);
                    next.push((nw, pc * oc));
                }
            }
            *partial = next;
            Ok(())
        };
        for g in w {
            if g.is_field() {
                run.push(g);
            } else {
                flush(&mut run, &mut partial, &mut steps)?;
                for (pw, _) in partial.iter_mut() {
                    pw.push(g);
                }
            }
        }
        flush(&mut run, &mut partial, &mut steps)?;
        out.extend(partial);
    }
    Ok(NCExpr::from_terms(out))
}

/// Canonical form for expressions with opaque symbols: Darboux inverse pairs cancelled and
/// every field run between opaque symbols normal ordered, repeated to a fixpoint.
pub fn canonicalize(e: &NCExpr) -> Result<NCExpr, AlgError> {
    let mut cur = canonicalize_once(e)?;
    for _ in 0..64 {
        let next = canonicalize_once(&cur)?;
        if next == cur {
            return Ok(cur.pruned(1e-13));
        }
        cur = next;
    }
    Err(AlgError::StepLimit(64))
}

/// Serialized as its text form.
impl Serialize for NCExpr {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl fmt::Display for NCExpr {
    /// `(c1) * w1 + (c2) * w2`, words as dot-joined symbols, `1` for the unit.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(w, c)| {
                let ws = if w.is_empty() {
                    "1".to_string()
                } else {
                    w.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(".")
                };
                format!("({c}) * {ws}")
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabeledEquation {
    pub label: String,
    pub expr: NCExpr,
}

/// Equations understood as `expr = 0`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EquationSet {
    pub equations: Vec<LabeledEquation>,
}

impl EquationSet {
    pub fn push(&mut self, label: impl Into<String>, expr: NCExpr) {
        self.equations.push(LabeledEquation { label: label.into(), expr });
    }

    pub fn get(&self, label: &str) -> Option<&NCExpr> {
        self.equations.iter().find(|e| e.label == label).map(|e| &e.expr)
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// One `label: expr` line per equation.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.equations {
            s.push_str(&format!("{}: {}\n", e.label, e.expr));
        }
        s
    }
}

/// Blocks `(site, tilde)` in canonical order, mapped to chain sites 1.. (site 1 first).
fn block_map(e: &NCExpr) -> BTreeMap<(i32, bool), usize> {
    let mut blocks: Vec<(i32, bool)> = e.terms.keys().flatten().map(|g| g.block()).collect();
    blocks.sort_unstable();
    blocks.dedup();
    blocks.into_iter().enumerate().map(|(i, b)| (b, i + 1)).collect()
}

/// Dense-free evaluation of a field-only expression on a chain, using `map` for the blocks.
pub fn evaluate(e: &NCExpr, ops: &ChainOps, map: &BTreeMap<(i32, bool), usize>) -> Result<SparseOperator, AlgError> {
    let assign = Assignment::new().set(Var::Q, ops.spec.q);
    let mut acc = ops.zero();
    for (w, c) in &e.terms {
        let mut op = ops.identity.clone();
        for g in w {
            let n = map[&g.block()];
            let f = match g.species {
                Species::V => ops.v(n),
                Species::VInv => ops.v_inv(n),
                Species::B => ops.b(n),
                Species::BDag => ops.b_dag(n),
                _ => return Err(AlgError::UnsupportedSpecies(g.to_string())),
            };
            op = &op * f;
        }
        acc = &acc + &op.scale(c.eval(&assign)?);
    }
    Ok(acc)
}

/// Residual between `e` and `normal_order(e)` in the Fock representation. Every `(site,
/// tilde)` block of `e` becomes its own chain site; `spec` supplies `d` and `q`.
pub fn numeric_crosscheck(e: &NCExpr, spec: &ChainSpec) -> Result<f64, AlgError> {
    let normal = normal_order(e)?;
    let map = block_map(&e.add(&normal));
    if map.is_empty() {
        let diff = e.sub(&normal);
        let assign = Assignment::new().set(Var::Q, spec.q);
        let c = diff.coefficient(&[]).eval(&assign)?;
        return Ok(c.norm());
    }
    let chain = ChainSpec::new(map.len(), spec.d, spec.q, Boundary::Periodic);
    let ops = ChainOps::new(&chain)?;
    let raise = |x: &NCExpr| {
        x.terms
            .keys()
            .map(|w| w.iter().filter(|g| g.species == Species::BDag).count())
            .max()
            .unwrap_or(0)
    };
    let r = raise(e).max(raise(&normal));
    let lhs = evaluate(e, &ops, &map)?;
    let rhs = evaluate(&normal, &ops, &map)?;
    Ok(safe_residual(&lhs, &rhs, r)?)
}

/// Random field word of length `0..=max_len` over sites `1..=sites`.
pub fn random_word(rng: &mut impl Rng, sites: i32, tildes: bool, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| {
            let sp = [Species::V, Species::VInv, Species::B, Species::BDag][rng.gen_range(0..4)];
            GenSymbol::new(sp, rng.gen_range(1..=sites), tildes && rng.gen_bool(0.5))
        })
        .collect()
}

/// Worst [`numeric_crosscheck`] over `count` random two-site words of length at most 6.
pub fn random_word_crosscheck(seed: u64, count: usize, spec: &ChainSpec) -> Result<f64, AlgError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let e = NCExpr::word(&random_word(&mut rng, 2, false, 6));
        worst = worst.max(numeric_crosscheck(&e, spec)?);
    }
    Ok(worst)
}

/// Scalar for a complex number, convenient in scripts.
pub fn c(re: f64, im: f64) -> LaurentPoly {
    LaurentPoly::constant(Complex64::new(re, im))
}

#[cfg(test)]
mod tests;
