//! Bäcklund relations from the Darboux matrix
//! `M_n = [[u θ^-1 A_n - u^-1 θ A_n^-1, X_n], [Y_n, -u^-1 θ A_n]]`, with `θ = e^Θ`, `u = e^λ`.

use super::{canonicalize, q_gap, AlgError, EquationSet, GenSymbol, NCExpr, Species};
use crate::coeffring::{LaurentPoly, Var};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Site used for the concrete derivations; nothing depends on its value beyond `n - 1 >= 1`.
pub const SITE: i32 = 2;

type M2 = [[NCExpr; 2]; 2];

fn th(e: i32) -> LaurentPoly {
    LaurentPoly::var(Var::Theta, e)
}
fn up(e: i32) -> LaurentPoly {
    LaurentPoly::var(Var::U, e)
}
fn qp(e: i32) -> LaurentPoly {
    LaurentPoly::var(Var::Q, e)
}
fn one_minus(p: LaurentPoly) -> LaurentPoly {
    &LaurentPoly::one() - &p
}
fn s(g: GenSymbol) -> NCExpr {
    NCExpr::sym(g)
}
fn w(gs: &[GenSymbol]) -> NCExpr {
    NCExpr::word(gs)
}
fn dot(sp: Species, n: i32) -> GenSymbol {
    GenSymbol::new(sp, n, false)
}

/// Scalars of the time components.
pub struct TimeCoefficients {
    pub zeta: LaurentPoly,
    pub zeta_t: LaurentPoly,
    pub a: LaurentPoly,
    pub b: LaurentPoly,
    pub c: LaurentPoly,
    pub d: LaurentPoly,
    pub a_t: LaurentPoly,
    pub b_t: LaurentPoly,
    pub c_t: LaurentPoly,
    pub d_t: LaurentPoly,
}

impl TimeCoefficients {
    pub fn new() -> Self {
        let zeta = &qp(-2) - &LaurentPoly::one();
        let zeta_t = &qp(2) - &LaurentPoly::one();
        let a = one_minus(qp(-1));
        let c = &qp(-1) - &qp(1);
        let d = one_minus(qp(1));
        TimeCoefficients {
            b: zeta.clone(),
            c_t: zeta_t.clone(),
            d_t: a.clone(),
            b_t: c.clone(),
            a_t: d.clone(),
            zeta,
            zeta_t,
            a,
            c,
            d,
        }
    }
}

impl Default for TimeCoefficients {
    fn default() -> Self {
        Self::new()
    }
}

fn mat_mul(x: &M2, y: &M2) -> M2 {
    let e = |i: usize, j: usize| x[i][0].mul(&y[0][j]).add(&x[i][1].mul(&y[1][j]));
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn mat_sub(x: &M2, y: &M2) -> M2 {
    let e = |i: usize, j: usize| x[i][j].sub(&y[i][j]);
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

pub fn darboux(n: i32) -> M2 {
    let a = s(GenSymbol::a(n));
    let ai = s(GenSymbol::a_inv(n));
    [
        [a.scale(&(&up(1) * &th(-1))).sub(&ai.scale(&(&up(-1) * &th(1)))), s(GenSymbol::x(n))],
        [s(GenSymbol::y(n)), a.scale(&(&up(-1) * &th(1))).neg()],
    ]
}

pub fn darboux_dot(n: i32) -> M2 {
    let ad = s(dot(Species::ADot, n));
    [
        [
            ad.scale(&(&up(1) * &th(-1))).sub(&s(dot(Species::AInvDot, n)).scale(&(&up(-1) * &th(1)))),
            s(dot(Species::XDot, n)),
        ],
        [s(dot(Species::YDot, n)), ad.scale(&(&up(-1) * &th(1))).neg()],
    ]
}

fn field(sp: Species, n: i32, tilde: bool) -> GenSymbol {
    GenSymbol::new(sp, n, tilde)
}

/// `L_n = [[u v, v b†], [v b, -u^-1 v]]`, i.e. `a = v b`, `a† = v b†`.
pub fn lax(n: i32, tilde: bool) -> M2 {
    let v = field(Species::V, n, tilde);
    [
        [s(v).scale(&up(1)), w(&[v, field(Species::BDag, n, tilde)])],
        [w(&[v, field(Species::B, n, tilde)]), s(v).scale(&up(-1)).neg()],
    ]
}

/// Which form of the minus time component to use: as printed, or the one extracted from the
/// monodromy expansion (identity shift dropped, it cancels in `Ã M - M 𝔸`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Printed,
    Working,
}

/// The time components at site `n` (fields at `n` and `n - 1`).
pub fn time_component(n: i32, branch: Branch, component: Component, tilde: bool) -> M2 {
    let k = TimeCoefficients::new();
    let f = |sp, m| field(sp, m, tilde);
    let (bd_n, b_n, bd_m, b_m) = (f(Species::BDag, n), f(Species::B, n), f(Species::BDag, n - 1), f(Species::B, n - 1));
    let hop = w(&[bd_n, b_m]);
    match branch {
        Branch::Plus => [
            [NCExpr::scalar(&k.zeta * &up(2)).add(&hop.scale(&k.a)), s(bd_n).scale(&(&up(1) * &k.b))],
            [s(b_m).scale(&(&up(1) * &k.c)), hop.scale(&k.d)],
        ],
        Branch::Minus if component == Component::Working => {
            let hop = w(&[b_n, bd_m]);
            [
                [hop.scale(&k.a), s(bd_m).scale(&(&up(-1) * &k.c))],
                [s(b_n).scale(&(&up(-1) * &(-&k.zeta_t))), NCExpr::scalar(&k.zeta_t * &up(-2)).add(&hop.scale(&k.d))],
            ]
        }
        Branch::Minus => [
            [w(&[bd_m, b_n]).scale(&k.a_t), s(bd_m).scale(&(&up(-1) * &k.b_t))],
            [s(b_n).scale(&(&up(-1) * &k.c_t)), NCExpr::scalar(&k.zeta_t * &up(-2)).add(&hop.scale(&k.d))],
        ],
    }
}

fn extract(m: &M2, prefix: &str) -> Result<EquationSet, AlgError> {
    let mut set = EquationSet::default();
    for (i, row) in m.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let e = canonicalize(e)?;
            for p in e.powers_of(Var::U).into_iter().rev() {
                let c = canonicalize(&e.coefficient_of(Var::U, p))?;
                if !c.is_zero() {
                    set.push(format!("{prefix}({},{})u^{p}", i + 1, j + 1), c);
                }
            }
        }
    }
    Ok(set)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

/// A relation `lhs = rhs` as printed.
#[derive(Clone, Debug)]
pub struct Relation {
    pub label: String,
    pub lhs: NCExpr,
    pub rhs: NCExpr,
}

impl Relation {
    fn new(label: impl Into<String>, lhs: NCExpr, rhs: NCExpr) -> Self {
        Relation { label: label.into(), lhs, rhs }
    }

    pub fn expr(&self) -> NCExpr {
        self.lhs.sub(&self.rhs)
    }

    fn map(&self, f: impl Fn(&NCExpr) -> Result<NCExpr, AlgError>) -> Result<Relation, AlgError> {
        Ok(Relation { label: self.label.clone(), lhs: f(&self.lhs)?, rhs: f(&self.rhs)? })
    }
}

/// The five printed static relations at site `n` (symbols up to `n + 1`).
pub fn printed_bt_star(n: i32) -> Vec<Relation> {
    use GenSymbol as G;
    let (a, ai, a1, a1i) = (G::a(n), G::a_inv(n), G::a(n + 1), G::a_inv(n + 1));
    let bd = G::b_dag(n);
    let b = G::b(n);
    let vt = G::v(n).tilde();
    vec![
        Relation::new("BT*.1", w(&[a1, G::v(n)]), w(&[vt, a])),
        Relation::new("BT*.2", s(G::x(n)), w(&[a, bd]).scale(&th(1))),
        Relation::new("BT*.3", s(G::x(n + 1)), w(&[a1i, bd]).sub(&w(&[bd.tilde(), a1])).scale(&th(-1))),
        Relation::new("BT*.4", s(G::y(n + 1)), w(&[b.tilde(), a1]).scale(&th(1))),
        Relation::new("BT*.5", s(G::y(n)), w(&[a, b]).sub(&w(&[b.tilde(), ai])).scale(&th(-1))),
    ]
}

/// Shifts every site index by `k`.
pub fn shift(e: &NCExpr, k: i32) -> NCExpr {
    NCExpr::from_terms(
        e.terms().map(|(word, c)| (word.iter().map(|g| GenSymbol { site: g.site + k, ..*g }).collect(), c.clone())),
    )
}

fn relabel_theta(e: &NCExpr) -> Result<NCExpr, AlgError> {
    e.substitute_var(Var::Theta, &th(-1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub produced: String,
    pub expected: String,
    /// `produced = scalar * (lhs - rhs)`.
    pub scalar: String,
    pub route: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearMatch {
    pub produced: String,
    pub expected: String,
    /// `produced = scalar * (lhs - rhs_factor * rhs)`; a strict match needs `rhs_factor = 1`.
    pub scalar: String,
    pub rhs_factor: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MismatchReport {
    pub matched: Vec<MatchEntry>,
    pub near: Vec<NearMatch>,
    /// Produced equations that vanish once the static relations are substituted.
    pub consequences: Vec<String>,
    pub unmatched_produced: Vec<(String, String)>,
    pub missing_expected: Vec<(String, String)>,
    pub notes: Vec<String>,
}

impl MismatchReport {
    /// Every expected relation was matched.
    pub fn reproduces(&self) -> bool {
        self.missing_expected.is_empty()
    }

    pub fn is_clean(&self) -> bool {
        self.missing_expected.is_empty() && self.unmatched_produced.is_empty()
    }
}

/// Exact quotient `a / b` when it is a single scaled monomial.
pub fn monomial_ratio(a: &LaurentPoly, b: &LaurentPoly) -> Option<LaurentPoly> {
    let (ma, ca) = a.terms().last()?;
    let (mb, cb) = b.terms().last()?;
    let r = LaurentPoly::term(ca / cb, ma.mul(&mb.inverse()));
    let rest = a - &(b * &r);
    (rest.max_abs_coefficient() <= 1e-10 * a.max_abs_coefficient().max(1.0)).then_some(r)
}

/// `num / den` in the simplest exact form available.
pub fn ratio_text(num: &LaurentPoly, den: &LaurentPoly) -> String {
    if let Some((k, m)) = den.as_monomial() {
        return num.mul_monomial(&m.inverse()).scale(1.0 / k).to_string();
    }
    match monomial_ratio(num, den) {
        Some(r) => r.to_string(),
        None => format!("({num})/({den})"),
    }
}

/// The scalar `c` (as text) with `p = c * e`, both canonical; `None` when not proportional.
/// Proportionality is tested by cross multiplication, so `c` may be a ratio of polynomials.
pub fn proportional(p: &NCExpr, e: &NCExpr) -> Option<String> {
    ratio_of(p, e).map(|(n, d)| ratio_text(&n, &d))
}

fn ratio_of(p: &NCExpr, e: &NCExpr) -> Option<(LaurentPoly, LaurentPoly)> {
    if p.is_zero() || e.is_zero() || p.len() != e.len() {
        return None;
    }
    if p.terms().zip(e.terms()).any(|((a, _), (b, _))| a != b) {
        return None;
    }
    let (w0, e0) = e.terms().next()?;
    let p0 = p.coefficient(w0);
    let size = p.max_abs().max(1.0) * e.max_abs().max(1.0);
    for (wd, ec) in e.terms() {
        let cross = &(&p.coefficient(wd) * e0) - &(&p0 * ec);
        if cross.max_abs_coefficient() > 1e-10 * size {
            return None;
        }
    }
    Some((p0, e0.clone()))
}

fn restrict(p: &NCExpr, like: &NCExpr) -> NCExpr {
    NCExpr::from_terms(p.terms().filter(|(wd, _)| !like.coefficient(wd).is_zero()).map(|(wd, c)| (wd.clone(), c.clone())))
}

/// Two-scalar fit `p = α (lhs - β rhs)`, returned as text.
fn near_match(p: &NCExpr, rel: &Relation) -> Option<(String, String)> {
    let (l, r) = (canonicalize(&rel.lhs).ok()?, canonicalize(&rel.rhs).ok()?);
    let (pl, pr) = (restrict(p, &l), restrict(p, &r));
    if pl.len() + pr.len() != p.len() {
        return None;
    }
    let (an, ad) = ratio_of(&pl, &l)?;
    let (gn, gd) = ratio_of(&pr, &r)?;
    // β = -γ/α
    let num = &(&gn * &ad) * &LaurentPoly::real(-1.0);
    let den = &gd * &an;
    Some((ratio_text(&an, &ad), ratio_text(&num, &den)))
}

struct Matcher<'a> {
    expected: &'a [Relation],
    report: MismatchReport,
    hit: Vec<bool>,
}

impl<'a> Matcher<'a> {
    fn new(expected: &'a [Relation]) -> Self {
        Matcher { expected, report: MismatchReport::default(), hit: vec![false; expected.len()] }
    }

    fn try_match(&mut self, label: &str, p: &NCExpr, route: &str) -> Result<bool, AlgError> {
        for (i, rel) in self.expected.iter().enumerate() {
            let e = canonicalize(&rel.expr())?;
            if let Some(c) = proportional(p, &e) {
                self.hit[i] = true;
                self.report.matched.push(MatchEntry {
                    produced: label.into(),
                    expected: rel.label.clone(),
                    scalar: c,
                    route: route.into(),
                });
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn try_near(&mut self, label: &str, p: &NCExpr) -> bool {
        for rel in self.expected {
            if let Some((a, b)) = near_match(p, rel) {
                self.report.near.push(NearMatch {
                    produced: label.into(),
                    expected: rel.label.clone(),
                    scalar: a,
                    rhs_factor: b,
                });
                return true;
            }
        }
        false
    }

    /// Word-level difference against the expected relation that carries the same time
    /// derivative, both normalized to a unit derivative coefficient.
    fn word_diff(&mut self, label: &str, p: &NCExpr) -> Result<(), AlgError> {
        for rel in self.expected {
            let e = canonicalize(&rel.expr())?;
            let Some((dw, _)) = e.terms().find(|(wd, _)| wd.len() == 1 && is_dynamic(&NCExpr::word(wd))) else {
                continue;
            };
            let Some((k, mono)) = p.coefficient(dw).as_monomial() else {
                continue;
            };
            let pn = p.scale(&LaurentPoly::term(Complex64::new(1.0, 0.0) / k, mono.inverse()));
            let d = canonicalize(&pn.sub(&e))?;
            let words: Vec<String> = d
                .terms()
                .map(|(wd, _)| {
                    let t: Vec<String> = wd.iter().map(|g| g.to_string()).collect();
                    format!("{} [{} vs {}]", t.join("."), pn.coefficient(wd), e.coefficient(wd))
                })
                .collect();
            self.report.notes.push(format!("{label} vs {}: differs in {}", rel.label, words.join(", ")));
            return Ok(());
        }
        Ok(())
    }

    fn finish(mut self) -> Result<MismatchReport, AlgError> {
        for (rel, hit) in self.expected.iter().zip(&self.hit) {
            if !hit {
                let e = canonicalize(&rel.expr())?;
                self.report.missing_expected.push((rel.label.clone(), e.to_string()));
            }
        }
        Ok(self.report)
    }
}

/// Raw coefficient equations of `M_{n+1} L_n - L̃_n M_n`.
pub fn space_raw(n: i32) -> Result<EquationSet, AlgError> {
    let m = mat_sub(&mat_mul(&darboux(n + 1), &lax(n, false)), &mat_mul(&lax(n, true), &darboux(n)));
    extract(&m, "M")
}

fn r1(n: i32, e: &NCExpr) -> Result<NCExpr, AlgError> {
    // A_{n+1} v_n -> ṽ_n A_n
    let out = e.rewrite(&[GenSymbol::a(n + 1), GenSymbol::v(n)], &w(&[GenSymbol::v(n).tilde(), GenSymbol::a(n)]))?;
    canonicalize(&out)
}

fn r1_inv(n: i32, e: &NCExpr) -> Result<NCExpr, AlgError> {
    // A_n v_n^-1 -> ṽ_n^-1 A_{n+1}
    let out = e.rewrite(&[GenSymbol::a(n), GenSymbol::v_inv(n)], &w(&[GenSymbol::v_inv(n).tilde(), GenSymbol::a(n + 1)]))?;
    canonicalize(&out)
}

fn lmul(g: GenSymbol, e: &NCExpr) -> Result<NCExpr, AlgError> {
    canonicalize(&s(g).mul(e))
}

fn rmul(e: &NCExpr, g: GenSymbol) -> Result<NCExpr, AlgError> {
    canonicalize(&e.mul(&s(g)))
}

/// Local Casimir `b† b = q^-1 v^-2 - 1` in either sector.
fn local_casimir(n: i32, e: &NCExpr) -> Result<NCExpr, AlgError> {
    let mut out = e.clone();
    for tilde in [false, true] {
        let vi = field(Species::VInv, n, tilde);
        let by = w(&[vi, vi]).scale(&qp(-1)).sub(&NCExpr::one());
        out = canonicalize(&out.rewrite(&[field(Species::BDag, n, tilde), field(Species::B, n, tilde)], &by)?)?;
    }
    Ok(out)
}

/// Isolation script for each raw space equation: one-sided multiplication by `v^±1` and the
/// exchange rule `A_{n+1} v_n = ṽ_n A_n` (used only after it has itself been extracted).
fn space_script(n: i32, label: &str, e: &NCExpr) -> Result<(NCExpr, &'static str), AlgError> {
    let (v, vt) = (GenSymbol::v_inv(n), GenSymbol::v_inv(n).tilde());
    Ok(match label {
        "M(1,2)u^1" => (lmul(vt, &r1(n, e)?)?, "exchange rule, left multiplication by ṽ_n^-1"),
        "M(1,2)u^-1" => (r1_inv(n, &rmul(e, v)?)?, "right multiplication by v_n^-1, exchange rule"),
        "M(2,1)u^1" => (r1_inv(n, &rmul(e, v)?)?, "right multiplication by v_n^-1, exchange rule"),
        "M(2,1)u^-1" => (r1(n, &lmul(vt, e)?)?, "left multiplication by ṽ_n^-1, exchange rule"),
        _ => (e.clone(), "direct"),
    })
}

/// Static relations solved for the Darboux symbols, as produced from the space equations.
fn derived_solutions(n: i32) -> Vec<(GenSymbol, NCExpr)> {
    use GenSymbol as G;
    let x = |m: i32| w(&[G::a(m), G::b_dag(m)]).scale(&th(-1));
    let x_up = |m: i32| {
        w(&[G::a_inv(m + 1), G::b_dag(m)]).sub(&w(&[G::b_dag(m).tilde(), G::a(m + 1)])).scale(&(&qp(-1) * &th(1))).neg()
    };
    let y_up = |m: i32| w(&[G::b(m).tilde(), G::a(m + 1)]).scale(&(&qp(1) * &th(-1)));
    let y = |m: i32| w(&[G::a(m), G::b(m)]).sub(&w(&[G::b(m).tilde(), G::a_inv(m)])).scale(&th(1));
    vec![
        (G::x(n), x(n)),
        (G::x(n + 1), x_up(n)),
        (G::y(n + 1), y_up(n)),
        (G::y(n), y(n)),
        (G::x(n), x_up(n - 1)),
        (G::y(n), y_up(n - 1)),
    ]
}

/// Every way of eliminating `X`/`Y` symbols with the derived static relations.
fn eliminations(n: i32, e: &NCExpr) -> Result<Vec<NCExpr>, AlgError> {
    let sols = derived_solutions(n);
    let mut out = vec![e.clone()];
    let syms: Vec<GenSymbol> = {
        let mut v: Vec<GenSymbol> =
            sols.iter().map(|(g, _)| *g).filter(|g| e.terms().any(|(wd, _)| wd.contains(g))).collect();
        v.sort();
        v.dedup();
        v
    };
    for g in syms {
        let mut next = Vec::new();
        for cur in &out {
            for (h, by) in sols.iter().filter(|(h, _)| *h == g) {
                next.push(canonicalize(&cur.substitute_symbol(*h, by))?);
            }
        }
        out = next;
    }
    Ok(out)
}

fn is_dynamic(e: &NCExpr) -> bool {
    e.contains_species(|sp| matches!(sp, Species::XDot | Species::YDot | Species::ADot | Species::AInvDot))
}

fn darboux_count(e: &NCExpr) -> usize {
    let mut syms: Vec<GenSymbol> =
        e.terms().flat_map(|(wd, _)| wd.iter().copied()).filter(|g| matches!(g.species, Species::X | Species::Y)).collect();
    syms.sort();
    syms.dedup();
    syms.len()
}

/// Tries, in order: a direct match; for time equations, elimination of `X`/`Y` through the
/// static relations; for static equations, a two-scalar near match, then elimination when
/// the equation ties two Darboux symbols together (a single-symbol equation would only be
/// eliminated by itself).
fn settle(n: i32, label: &str, p: &NCExpr, m: &mut Matcher, leftovers: &mut Vec<(String, NCExpr)>) -> Result<(), AlgError> {
    if m.try_match(label, p, "direct")? {
        return Ok(());
    }
    let dynamic = is_dynamic(p);
    if !dynamic && m.try_near(label, p) {
        leftovers.push((label.to_string(), p.clone()));
        return Ok(());
    }
    if dynamic || darboux_count(p) != 1 {
        for elim in eliminations(n, p)? {
            let elim = local_casimir(n, &r1(n, &elim)?)?;
            if elim.is_zero() {
                m.report.consequences.push(label.to_string());
                return Ok(());
            }
            if dynamic && m.try_match(label, &elim, "after eliminating X/Y with the static relations")? {
                return Ok(());
            }
        }
    }
    if dynamic {
        m.word_diff(label, p)?;
    }
    leftovers.push((label.to_string(), p.clone()));
    Ok(())
}

fn finalize(m: &mut Matcher, leftovers: Vec<(String, NCExpr)>) {
    for (label, p) in leftovers {
        m.report.unmatched_produced.push((label, p.to_string()));
    }
}

/// Processed space equations (each `expr = 0`) and their comparison with the printed static
/// relations after the global relabel `Θ -> -Θ`.
pub fn darboux_space_equations() -> Result<(EquationSet, MismatchReport), AlgError> {
    let n = SITE;
    let raw = space_raw(n)?;
    let expected: Vec<Relation> =
        printed_bt_star(n).iter().map(|r| r.map(relabel_theta)).collect::<Result<_, _>>()?;
    let mut m = Matcher::new(&expected);
    let mut set = EquationSet::default();
    let mut leftovers = Vec::new();
    for eq in &raw.equations {
        let (p, route) = space_script(n, &eq.label, &eq.expr)?;
        set.push(eq.label.clone(), p.clone());
        if route != "direct" {
            if m.try_match(&eq.label, &p, route)? {
                continue;
            }
            m.try_near(&eq.label, &p);
            leftovers.push((eq.label.clone(), p));
        } else {
            settle(n, &eq.label, &p, &mut m, &mut leftovers)?;
        }
    }
    finalize(&mut m, leftovers);
    m.report.notes.push(format!(
        "n = {n}; {} nonzero coefficient equations; printed relations compared with Θ -> -Θ",
        raw.len()
    ));
    Ok((set, m.finish()?))
}

#[derive(Clone, Debug, Serialize)]
pub struct BtiRecord {
    pub line1: NCExpr,
    pub line2: NCExpr,
    /// Casimir step of line 1, `A^-2_{n+1} b†_n -> q b†_n + θ² b†_{n+1} b̃_n b†_n`.
    pub substitution: NCExpr,
    pub diff_vs_printed: MismatchReport,
}

/// `A_n^-2 -> q + θ² b†_n b̃_{n-1}`.
fn casimir(n: i32, e: &NCExpr) -> Result<NCExpr, AlgError> {
    let by = NCExpr::scalar(qp(1)).add(&w(&[GenSymbol::b_dag(n), GenSymbol::b(n - 1).tilde()]).scale(&th(2)));
    canonicalize(&e.rewrite(&[GenSymbol::a_inv(n), GenSymbol::a_inv(n)], &by)?)
}

pub fn printed_bti(n: i32) -> Vec<Relation> {
    use GenSymbol as G;
    let bd = G::b_dag(n);
    let bt = G::b(n).tilde();
    let line1 = Relation::new(
        "bti.1",
        s(bd).scale(&qp(1)).sub(&w(&[G::a_inv(n + 1), bd.tilde(), G::a(n + 1)])),
        s(G::b_dag(n + 1)).sub(&w(&[G::b_dag(n + 1), bt, bd])).scale(&th(2)),
    );
    let line2 = Relation::new(
        "bti.2",
        s(bt).scale(&qp(1)).sub(&w(&[G::a(n), G::b(n), G::a_inv(n)]).scale(&qp(-1))),
        s(G::b(n - 1).tilde()).add(&w(&[bt, bd, G::b(n - 1).tilde()])).scale(&th(2)).neg(),
    );
    vec![line1, line2]
}

/// Scripted derivation of the time-independent relations from the printed static set.
pub fn derive_bti() -> Result<BtiRecord, AlgError> {
    use GenSymbol as G;
    let n = SITE;
    let bt = printed_bt_star(n);
    let bt_up = printed_bt_star(n + 1);
    let bt_down = printed_bt_star(n - 1);

    // X_{n+1}: BT*.2 shifted up against BT*.3.
    let eq = canonicalize(&bt[2].rhs.sub(&bt_up[1].rhs))?;
    let eq = lmul(G::a_inv(n + 1), &eq)?;
    let substitution = casimir(n + 1, &canonicalize(&w(&[G::a_inv(n + 1), G::a_inv(n + 1), G::b_dag(n)]))?)?;
    let line1 = canonicalize(&casimir(n + 1, &eq)?.scale(&th(1)))?;

    // Y_n: BT*.4 shifted down against BT*.5.
    let eq = canonicalize(&bt_down[3].rhs.sub(&bt[4].rhs))?;
    let eq = rmul(&eq, G::a_inv(n))?;
    let line2 = canonicalize(&casimir(n, &eq)?.scale(&th(1)))?;

    let printed = printed_bti(n);
    let mut diff = MismatchReport::default();
    for (label, got, rel) in [("line1", &line1, &printed[0]), ("line2", &line2, &printed[1])] {
        let e = canonicalize(&rel.expr())?;
        match proportional(got, &e) {
            Some(c) => diff.matched.push(MatchEntry {
                produced: label.into(),
                expected: rel.label.clone(),
                scalar: c,
                route: "scripted".into(),
            }),
            None => {
                diff.missing_expected.push((rel.label.clone(), e.to_string()));
                diff.unmatched_produced.push((label.into(), got.to_string()));
                // Word by word comparison after fixing the scale on the first shared monomial term.
                let scale = e
                    .terms()
                    .find_map(|(wd, c)| c.as_monomial().map(|(k, m)| got.coefficient(wd).mul_monomial(&m.inverse()).scale(1.0 / k)));
                if let Some(sc) = scale {
                    let printed = e.scale(&sc);
                    let d = canonicalize(&got.sub(&printed))?;
                    for (wd, _) in d.terms() {
                        let wtxt: Vec<String> = wd.iter().map(|g| g.to_string()).collect();
                        diff.notes.push(format!(
                            "{label}: {} has {} derived vs {} printed (printed scaled by {sc})",
                            wtxt.join("."),
                            got.coefficient(wd),
                            printed.coefficient(wd)
                        ));
                    }
                }
            }
        }
    }
    Ok(BtiRecord { line1, line2, substitution, diff_vs_printed: diff })
}

/// Raw coefficient equations of `Ṁ_n - (Ã_n M_n - M_n 𝔸_n)` for the printed time component.
pub fn time_raw(n: i32, branch: Branch, component: Component) -> Result<EquationSet, AlgError> {
    let at = time_component(n, branch, component, true);
    let a = time_component(n, branch, component, false);
    let m = darboux(n);
    let rhs = mat_sub(&mat_mul(&at, &m), &mat_mul(&m, &a));
    extract(&mat_sub(&darboux_dot(n), &rhs), "T")
}

pub fn printed_time_list(n: i32, branch: Branch) -> Vec<Relation> {
    use GenSymbol as G;
    let k = TimeCoefficients::new();
    let (x, y, a, ai) = (G::x(n), G::y(n), G::a(n), G::a_inv(n));
    let ds = |sp| s(dot(sp, n));
    let (bd, b, bdm, bm) = (G::b_dag(n), G::b(n), G::b_dag(n - 1), G::b(n - 1));
    let ainv_dot = Relation::new(
        "Ainvdot",
        ds(Species::AInvDot),
        w(&[bd.tilde(), bm.tilde(), ai]).sub(&w(&[ai, bd, bm])).scale(&k.a),
    );
    let (tag, mut list) = match branch {
        Branch::Plus => (
            "BTa",
            vec![
                Relation::new(
                    "Xdot",
                    ds(Species::XDot),
                    w(&[bd.tilde(), bm.tilde(), x])
                        .scale(&k.a)
                        .sub(&w(&[x, bd, bm]).scale(&k.d))
                        .add(&w(&[ai, bd]).sub(&w(&[b.tilde(), a])).scale(&(&k.b * &th(-1)))),
                ),
                Relation::new(
                    "Ydot",
                    ds(Species::YDot),
                    w(&[bd.tilde(), bm.tilde(), y])
                        .scale(&k.d)
                        .sub(&w(&[y, bd, bm]).scale(&k.a))
                        .add(&w(&[a, bm]).sub(&w(&[bdm.tilde(), ai])).scale(&(&k.c * &th(-1)))),
                ),
                Relation::new("Adot", ds(Species::ADot), w(&[bd.tilde(), bm.tilde(), a]).sub(&w(&[a, bd, bm])).scale(&k.d)),
            ],
        ),
        Branch::Minus => (
            "BTb",
            vec![
                Relation::new(
                    "Xdot",
                    ds(Species::XDot),
                    w(&[b.tilde(), bdm.tilde(), x])
                        .scale(&k.d_t)
                        .sub(&w(&[x, b, bdm]).scale(&k.a_t))
                        .sub(&w(&[a, bdm]).scale(&(&k.b_t * &th(1)))),
                ),
                Relation::new(
                    "Ydot",
                    ds(Species::YDot),
                    w(&[b.tilde(), bdm.tilde(), y])
                        .scale(&k.a_t)
                        .sub(&w(&[y, b, bdm]).scale(&k.d_t))
                        .add(&w(&[b.tilde(), a]).scale(&(&k.c * &th(1)))),
                ),
                Relation::new("Adot", ds(Species::ADot), w(&[b.tilde(), bdm.tilde(), a]).sub(&w(&[a, b, bdm])).scale(&k.d)),
            ],
        ),
    };
    list.push(ainv_dot);
    for r in &mut list {
        r.label = format!("{tag}.{}", r.label);
    }
    list
}

/// Processed time equations for one branch and their comparison with the printed list (and
/// with the printed static relations at sites `n` and `n - 1`), after `Θ -> -Θ`.
pub fn darboux_time_equations(branch: Branch) -> Result<(EquationSet, MismatchReport), AlgError> {
    darboux_time_equations_with(branch, Component::Printed)
}

pub fn darboux_time_equations_with(branch: Branch, component: Component) -> Result<(EquationSet, MismatchReport), AlgError> {
    let n = SITE;
    let raw = time_raw(n, branch, component)?;
    let mut expected: Vec<Relation> = printed_time_list(n, branch);
    let n_dynamic = expected.len();
    expected.extend(printed_bt_star(n));
    expected.extend(printed_bt_star(n - 1).into_iter().map(|mut r| {
        r.label = format!("{}@n-1", r.label);
        r
    }));
    let expected: Vec<Relation> = expected.iter().map(|r| r.map(relabel_theta)).collect::<Result<_, _>>()?;
    let mut m = Matcher::new(&expected);
    let mut leftovers = Vec::new();
    for eq in &raw.equations {
        settle(n, &eq.label, &eq.expr, &mut m, &mut leftovers)?;
    }
    finalize(&mut m, leftovers);
    // Static relations are targets only where produced; unmatched ones are not missing.
    let mut report = m.finish()?;
    let statics: Vec<String> = expected[n_dynamic..].iter().map(|r| r.label.clone()).collect();
    let recovered: Vec<String> = report
        .matched
        .iter()
        .filter(|x| statics.contains(&x.expected))
        .map(|x| x.expected.clone())
        .collect();
    report.missing_expected.retain(|(l, _)| !statics.contains(l));
    report.notes.push(format!("static relations recovered: {}", if recovered.is_empty() { "none".into() } else { recovered.join(", ") }));
    report.notes.push("Ainvdot stands for d(A^-1)/dt, printed as -A^-2 Ȧ".into());
    Ok((raw, report))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExplicitTimeRecord {
    pub resolved: bool,
    pub reason: String,
}

/// The explicit `ḃ†_n`, `ḃ_{n-1}` forms need time derivatives of the fields themselves, which
/// the opaque Darboux calculus does not carry; they are reported as unresolved.
pub fn explicit_time_equations() -> ExplicitTimeRecord {
    ExplicitTimeRecord {
        resolved: false,
        reason: format!(
            "no scripted route: eliminating X_n = θ^-1 A_n b†_n from Ẋ_n needs ḃ†_n as a generator and a \
             Leibniz rule through the opaque A_n; commutator scale {} left symbolic",
            q_gap()
        ),
    }
}
