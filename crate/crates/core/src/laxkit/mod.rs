//! Spectral-parameter dependent objects of the q-oscillator chain.
//!
//! Everything is an [`OperatorLaurentMatrix`]: a small auxiliary matrix whose entries are
//! Laurent polynomials in `(u, w)` with sparse-operator coefficients. The same builders
//! work symbolically ([`Spectral::Symbolic`]) or at a numeric point ([`Spectral::Point`]),
//! where every entry collapses to its `(0, 0)` coefficient.
//!
//! Conventions. `L_n(u) = [[u v_n, a+_n], [a_n, -u^-1 v_n]]`. The two-space objects live on
//! `a ⊗ b` with index `2i + j` (`i` in `a`). `R(x)` carries `alpha = qx - q^-1x^-1` on the
//! outer diagonal, `beta = x - x^-1` on the inner diagonal and `gamma = q - q^-1` on the swap
//! entries; `R^-` uses `x = u/w` and `R^+` uses `x = uw`.

pub mod closed_forms;

use crate::coeffring::{LaurentPoly, Var};
use crate::fockspace::{safe_columns, Boundary, ChainOps, ChainSpec, FockError, SparseOperator};
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaxError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("bad site range {hi}..{lo} for N = {n}")]
    BadRange { hi: usize, lo: usize, n: usize },
    #[error("leading coefficient is not an invertible diagonal monomial: {0}")]
    NonInvertibleLeading(String),
    #[error("symbolic expansion requested for a point-evaluated object")]
    NotSymbolic,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Where spectral parameters live.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spectral {
    Symbolic,
    Point { u: Complex64, w: Complex64 },
}

/// An operator-valued Laurent polynomial in `(u, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentOperator {
    d: usize,
    sites: usize,
    terms: BTreeMap<(i32, i32), SparseOperator>,
}

impl LaurentOperator {
    pub fn zero(d: usize, sites: usize) -> Self {
        Self { d, sites, terms: BTreeMap::new() }
    }

    pub fn monomial(op: SparseOperator, pu: i32, pw: i32) -> Self {
        let mut z = Self::zero(op.local_dim(), op.sites());
        if !op.is_zero() {
            z.terms.insert((pu, pw), op);
        }
        z
    }

    pub fn constant(op: SparseOperator) -> Self {
        Self::monomial(op, 0, 0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i32, i32), &SparseOperator)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, pu: i32, pw: i32) -> SparseOperator {
        self.terms.get(&(pu, pw)).cloned().unwrap_or_else(|| SparseOperator::zero(self.d, self.sites))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|o| o.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|o| o.max_abs()).fold(0.0, f64::max)
    }

    pub fn u_powers(&self) -> Vec<i32> {
        let mut p: Vec<i32> = self.terms.iter().filter(|(_, o)| !o.is_zero()).map(|(k, _)| k.0).collect();
        p.dedup();
        p
    }

    fn insert_add(&mut self, k: (i32, i32), op: SparseOperator) {
        match self.terms.get_mut(&k) {
            Some(x) => *x = &*x + &op,
            None => {
                self.terms.insert(k, op);
            }
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (k, op) in &o.terms {
            out.insert_add(*k, op.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(c(-1.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { d: self.d, sites: self.sites, terms: self.terms.iter().map(|(k, o)| (*k, o.scale(s))).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.d, self.sites);
        for (k1, a) in &self.terms {
            for (k2, b) in &o.terms {
                out.insert_add((k1.0 + k2.0, k1.1 + k2.1), a * b);
            }
        }
        out
    }

    /// Multiplies by a scalar Laurent polynomial in `u`, `w` (with `q` and `theta` numeric).
    pub fn mul_poly(&self, p: &BTreeMap<(i32, i32), Complex64>) -> Self {
        let mut out = Self::zero(self.d, self.sites);
        for (k1, a) in &self.terms {
            for (k2, s) in p {
                out.insert_add((k1.0 + k2.0, k1.1 + k2.1), a.scale(*s));
            }
        }
        out
    }

    pub fn eval(&self, u: Complex64, w: Complex64) -> SparseOperator {
        let mut out = SparseOperator::zero(self.d, self.sites);
        for ((pu, pw), op) in &self.terms {
            out = &out + &op.scale(u.powi(*pu) * w.powi(*pw));
        }
        out
    }

    /// The coefficient of `u^pu`, as a polynomial in `w`.
    pub fn coefficient_u(&self, pu: i32) -> Self {
        Self {
            d: self.d,
            sites: self.sites,
            terms: self.terms.iter().filter(|(k, _)| k.0 == pu).map(|(k, o)| ((0, k.1), o.clone())).collect(),
        }
    }

    /// Maps every power `(pu, pw)` to `f(pu, pw) = (scalar, new powers)`.
    pub fn map_powers(&self, f: impl Fn(i32, i32) -> (Complex64, (i32, i32))) -> Self {
        let mut out = Self::zero(self.d, self.sites);
        for ((pu, pw), op) in &self.terms {
            let (s, k) = f(*pu, *pw);
            out.insert_add(k, op.scale(s));
        }
        out
    }

    pub fn pruned(&self, tol: f64) -> Self {
        Self {
            d: self.d,
            sites: self.sites,
            terms: self
                .terms
                .iter()
                .map(|(k, o)| (*k, o.pruned(tol)))
                .filter(|(_, o)| !o.is_zero())
                .collect(),
        }
    }
}

/// Residual between two operator Laurent polynomials: max over powers of the safe-column
/// difference, normalized by `max(1, |lhs|, |rhs|)` over all coefficients.
pub fn laurent_residual(lhs: &LaurentOperator, rhs: &LaurentOperator, r: usize) -> f64 {
    let safe = safe_columns(lhs.d, lhs.sites, r);
    let mut keep = vec![false; lhs.d.pow(lhs.sites as u32)];
    for c in safe {
        keep[c] = true;
    }
    let diff = lhs.sub(rhs);
    let num = diff
        .terms
        .values()
        .flat_map(|o| o.entries())
        .filter(|(_, col, _)| keep[*col])
        .map(|(_, _, v)| v.norm())
        .fold(0.0, f64::max);
    num / 1f64.max(lhs.max_abs()).max(rhs.max_abs())
}

/// A matrix over the auxiliary space with [`LaurentOperator`] entries.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorLaurentMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<LaurentOperator>,
}

impl OperatorLaurentMatrix {
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<LaurentOperator>) -> Self {
        assert_eq!(entries.len(), rows * cols);
        Self { rows, cols, entries }
    }

    pub fn zeros(rows: usize, cols: usize, d: usize, sites: usize) -> Self {
        Self { rows, cols, entries: vec![LaurentOperator::zero(d, sites); rows * cols] }
    }

    pub fn identity(n: usize, d: usize, sites: usize) -> Self {
        Self::scalar_diag(n, &LaurentOperator::constant(SparseOperator::identity(d, sites)))
    }

    /// `x · 1` on an `n`-dimensional auxiliary space.
    pub fn scalar_diag(n: usize, x: &LaurentOperator) -> Self {
        let mut m = Self::zeros(n, n, x.d, x.sites);
        for i in 0..n {
            m.entries[i * n + i] = x.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentOperator {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: LaurentOperator) {
        self.entries[i * self.cols + j] = x;
    }

    pub fn entries(&self) -> &[LaurentOperator] {
        &self.entries
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.entries[0].d, self.entries[0].sites)
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "auxiliary dimension mismatch");
        let (d, s) = self.dims();
        let mut out = Self::zeros(self.rows, o.cols, d, s);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc = LaurentOperator::zero(d, s);
                for k in 0..self.cols {
                    let (a, b) = (self.get(i, k), o.get(k, j));
                    if a.terms.is_empty() || b.terms.is_empty() {
                        continue;
                    }
                    acc = acc.add(&a.mul(b));
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn product(factors: &[Self]) -> Self {
        let mut it = factors.iter();
        let first = it.next().expect("empty product").clone();
        it.fold(first, |acc, f| acc.mul(f))
    }

    fn zip(&self, o: &Self, f: impl Fn(&LaurentOperator, &LaurentOperator) -> LaurentOperator) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&o.entries).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.sub(b))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|e| e.scale(s))
    }

    pub fn map(&self, f: impl Fn(&LaurentOperator) -> LaurentOperator) -> Self {
        Self { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    /// Entrywise `x e - e x` for a scalar (auxiliary-identity) operator polynomial `x`.
    pub fn commutator_with(&self, x: &LaurentOperator) -> Self {
        self.map(|e| x.mul(e).sub(&e.mul(x)))
    }

    pub fn trace(&self) -> LaurentOperator {
        assert_eq!(self.rows, self.cols);
        let (d, s) = self.dims();
        (0..self.rows).fold(LaurentOperator::zero(d, s), |acc, i| acc.add(self.get(i, i)))
    }

    /// Trace over the `a` factor of a 4×4 matrix on `a ⊗ b`.
    pub fn partial_trace_a(&self) -> Self {
        assert_eq!((self.rows, self.cols), (4, 4));
        let (d, s) = self.dims();
        let mut out = Self::zeros(2, 2, d, s);
        for i in 0..2 {
            for j in 0..2 {
                out.set(i, j, self.get(i, j).add(self.get(2 + i, 2 + j)));
            }
        }
        out
    }

    /// `M ⊗ 1_b` for a 2×2 `M`.
    pub fn embed_a(&self) -> Self {
        assert_eq!((self.rows, self.cols), (2, 2));
        let (d, s) = self.dims();
        let mut out = Self::zeros(4, 4, d, s);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out.set(2 * i + k, 2 * j + k, self.get(i, j).clone());
                }
            }
        }
        out
    }

    /// `1_a ⊗ M` for a 2×2 `M`.
    pub fn embed_b(&self) -> Self {
        assert_eq!((self.rows, self.cols), (2, 2));
        let (d, s) = self.dims();
        let mut out = Self::zeros(4, 4, d, s);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out.set(2 * k + i, 2 * k + j, self.get(i, j).clone());
                }
            }
        }
        out
    }

    pub fn transpose_aux(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows, self.dims().0, self.dims().1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    /// `V M V` with `V = antidiag(1, 1)`.
    pub fn conj_v(&self) -> Self {
        assert_eq!((self.rows, self.cols), (2, 2));
        let mut out = self.clone();
        for i in 0..2 {
            for j in 0..2 {
                out.set(i, j, self.get(1 - i, 1 - j).clone());
            }
        }
        out
    }

    pub fn eval(&self, u: Complex64, w: Complex64) -> Self {
        self.map(|e| LaurentOperator::constant(e.eval(u, w)))
    }

    /// Coefficient of `u^pu`, entrywise, keeping the `w` dependence.
    pub fn coefficient_u(&self, pu: i32) -> Self {
        self.map(|e| e.coefficient_u(pu))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    pub fn pruned(&self, tol: f64) -> Self {
        self.map(|e| e.pruned(tol))
    }

    /// All `u` powers present in any entry, ascending.
    pub fn u_powers(&self) -> Vec<i32> {
        let mut p: Vec<i32> = self.entries.iter().flat_map(|e| e.u_powers()).collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    /// Inverse of a diagonal matrix whose entries are single `(u, w)` monomials with
    /// invertible diagonal operator coefficients.
    pub fn diagonal_monomial_inverse(&self) -> Result<Self, LaxError> {
        let (d, s) = self.dims();
        let mut out = Self::zeros(self.rows, self.cols, d, s);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let e = self.get(i, j).pruned(1e-13);
                if i != j {
                    if !e.is_zero() {
                        return Err(LaxError::NonInvertibleLeading(format!("off-diagonal entry ({i},{j})")));
                    }
                    continue;
                }
                if e.terms.len() != 1 {
                    return Err(LaxError::NonInvertibleLeading(format!(
                        "entry ({i},{i}) has {} monomials",
                        e.terms.len()
                    )));
                }
                let ((pu, pw), op) = e.terms.iter().next().unwrap();
                let inv = op
                    .diagonal_inverse()
                    .ok_or_else(|| LaxError::NonInvertibleLeading(format!("entry ({i},{i}) not invertible")))?;
                out.set(i, i, LaurentOperator::monomial(inv, -pu, -pw));
            }
        }
        Ok(out)
    }
}

/// Entrywise [`laurent_residual`], normalized by the largest coefficient of either side.
pub fn matrix_residual(lhs: &OperatorLaurentMatrix, rhs: &OperatorLaurentMatrix, r: usize) -> f64 {
    assert_eq!((lhs.rows, lhs.cols), (rhs.rows, rhs.cols));
    let scale = 1f64.max(lhs.max_abs()).max(rhs.max_abs());
    let (d, s) = lhs.dims();
    let safe = safe_columns(d, s, r);
    let mut keep = vec![false; d.pow(s as u32)];
    for c in safe {
        keep[c] = true;
    }
    let mut num: f64 = 0.0;
    for (a, b) in lhs.entries.iter().zip(&rhs.entries) {
        let diff = a.sub(b);
        for o in diff.terms.values() {
            for (_, col, v) in o.entries() {
                if keep[col] {
                    num = num.max(v.norm());
                }
            }
        }
    }
    num / scale
}

/// The 4×4 R-matrix with entries in `x` (stored in the variable `u`) and symbolic `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct RMatrix {
    pub entries: [[LaurentPoly; 4]; 4],
}

/// Which combination of the spectral parameters plays `x` in `R(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RArg {
    /// `x = u / w` (`lambda - mu`).
    Ratio,
    /// `x = u w` (`lambda + mu`).
    Product,
}

impl RMatrix {
    pub fn new() -> Self {
        use crate::coeffring::{alpha, beta, gamma};
        let z = LaurentPoly::zero;
        let mut e: [[LaurentPoly; 4]; 4] = Default::default();
        for row in e.iter_mut() {
            for x in row.iter_mut() {
                *x = z();
            }
        }
        e[0][0] = alpha(Var::U);
        e[3][3] = alpha(Var::U);
        e[1][1] = beta(Var::U);
        e[2][2] = beta(Var::U);
        e[1][2] = gamma();
        e[2][1] = gamma();
        Self { entries: e }
    }

    pub fn eval(&self, x: Complex64, q: Complex64) -> [[Complex64; 4]; 4] {
        let a = crate::coeffring::Assignment::new().set(Var::U, x).set(Var::Q, q);
        let mut out = [[Complex64::default(); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = self.entries[i][j].eval(&a).expect("R entries use only x and q");
            }
        }
        out
    }

    /// `R_21 = P R_12 P` with `P` the swap of the two factors.
    pub fn swapped(&self) -> Self {
        let p = |k: usize| (k % 2) * 2 + k / 2;
        let mut out = self.clone();
        for i in 0..4 {
            for j in 0..4 {
                out.entries[i][j] = self.entries[p(i)][p(j)].clone();
            }
        }
        out
    }
}

impl Default for RMatrix {
    fn default() -> Self {
        Self::new()
    }
}

/// 2×2 reflection matrix with entries in `u` and `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct KMatrix {
    pub entries: [[LaurentPoly; 2]; 2],
}

impl KMatrix {
    pub fn identity() -> Self {
        Self::constant_diag(c(1.0), c(1.0))
    }

    pub fn constant_diag(a: Complex64, b: Complex64) -> Self {
        Self {
            entries: [
                [LaurentPoly::constant(a), LaurentPoly::zero()],
                [LaurentPoly::zero(), LaurentPoly::constant(b)],
            ],
        }
    }

    pub fn eval(&self, u: Complex64, q: Complex64) -> [[Complex64; 2]; 2] {
        let a = crate::coeffring::Assignment::new().set(Var::U, u).set(Var::Q, q);
        let mut out = [[Complex64::default(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.entries[i][j].eval(&a).expect("K entries use only u and q");
            }
        }
        out
    }
}

/// How the crossing substitution `lambda -> -lambda - i mu` is realized on `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    /// `u -> -q^-1 u^-1`; gives `L̂(λ) L(-λ) = 1`.
    Shifted,
    /// `u -> q^-1 u^-1`, the plain monomial substitution.
    Literal,
}

/// Additive perturbation `eps · 1` of one entry of every `L_n`, for negative controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub entry: (usize, usize),
    pub eps: f64,
}

/// Which generator family to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Closed,
    Open,
    HattedClosed,
    HattedOpen,
}

/// Builder for all chain objects of one [`ChainSpec`].
#[derive(Debug, Clone)]
pub struct LaxModel {
    pub ops: ChainOps,
    pub crossing: Crossing,
    pub perturbation: Option<Perturbation>,
}

impl LaxModel {
    pub fn new(spec: &ChainSpec) -> Result<Self, LaxError> {
        Ok(Self { ops: ChainOps::new(spec)?, crossing: Crossing::Shifted, perturbation: None })
    }

    pub fn with_perturbation(mut self, p: Perturbation) -> Self {
        self.perturbation = Some(p);
        self
    }

    pub fn with_crossing(mut self, c: Crossing) -> Self {
        self.crossing = c;
        self
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.ops.spec
    }

    pub fn q(&self) -> Complex64 {
        self.ops.spec.q
    }

    fn dims(&self) -> (usize, usize) {
        (self.ops.spec.d, self.ops.spec.n)
    }

    /// `s · op · x^p` for `x ∈ {u, w}` in the requested mode.
    fn mono(&self, mode: Spectral, var: Var, op: &SparseOperator, s: Complex64, p: i32) -> LaurentOperator {
        match mode {
            Spectral::Symbolic => {
                let k = if var == Var::U { (p, 0) } else { (0, p) };
                LaurentOperator::monomial(op.scale(s), k.0, k.1)
            }
            Spectral::Point { u, w } => {
                let x = if var == Var::U { u } else { w };
                LaurentOperator::constant(op.scale(s * x.powi(p)))
            }
        }
    }

    fn check_site(&self, n: usize) -> Result<(), LaxError> {
        if n < 1 || n > self.ops.spec.n {
            return Err(FockError::SiteOutOfRange { site: n, n: self.ops.spec.n }.into());
        }
        Ok(())
    }

    /// `L_n` in the spectral variable `var`, optionally with `var -> s · var^-1` applied.
    fn l_entries(&self, n: usize, var: Var, subst: Option<Complex64>) -> Result<[(Complex64, i32); 2], LaxError> {
        self.check_site(n)?;
        // (1,1) = x v, (2,2) = -x^-1 v; after x -> s x^-1: (1,1) = s x^-1 v, (2,2) = -s^-1 x v
        let _ = var;
        Ok(match subst {
            None => [(c(1.0), 1), (c(-1.0), -1)],
            Some(s) => [(s, -1), (-1.0 / s, 1)],
        })
    }

    fn assemble_l(&self, n: usize, var: Var, mode: Spectral, subst: Option<Complex64>) -> Result<OperatorLaurentMatrix, LaxError> {
        let [(c11, p11), (c22, p22)] = self.l_entries(n, var, subst)?;
        let o = &self.ops;
        let mut e = vec![
            self.mono(mode, var, o.v(n), c11, p11),
            LaurentOperator::constant(o.a_dag(n).clone()),
            LaurentOperator::constant(o.a(n).clone()),
            self.mono(mode, var, o.v(n), c22, p22),
        ];
        if let Some(p) = self.perturbation {
            let k = p.entry.0 * 2 + p.entry.1;
            e[k] = e[k].add(&LaurentOperator::constant(o.scalar(c(p.eps))));
        }
        Ok(OperatorLaurentMatrix::from_entries(2, 2, e))
    }

    /// `L_n(x) = [[x v_n, a+_n], [a_n, -x^-1 v_n]]` with `x` the variable `var`.
    pub fn l(&self, n: usize, var: Var, mode: Spectral) -> Result<OperatorLaurentMatrix, LaxError> {
        self.assemble_l(n, var, mode, None)
    }

    /// `L̂_n = V L_n^t(x') V` with the crossing substitution `x -> x'` of [`Crossing`].
    pub fn hat_l(&self, n: usize, var: Var, mode: Spectral) -> Result<OperatorLaurentMatrix, LaxError> {
        let s = match self.crossing {
            Crossing::Shifted => -1.0 / self.q(),
            Crossing::Literal => 1.0 / self.q(),
        };
        Ok(self.assemble_l(n, var, mode, Some(s))?.transpose_aux().conj_v())
    }

    pub fn r(&self, arg: RArg, mode: Spectral) -> OperatorLaurentMatrix {
        let (d, s) = self.dims();
        let q = self.q();
        let id = &self.ops.identity;
        let wsign = if arg == RArg::Ratio { -1 } else { 1 };
        let term = |coef: Complex64, p: i32| -> LaurentOperator {
            match mode {
                Spectral::Symbolic => LaurentOperator::monomial(id.scale(coef), p, wsign * p),
                Spectral::Point { u, w } => {
                    let x = if arg == RArg::Ratio { u / w } else { u * w };
                    LaurentOperator::constant(id.scale(coef * x.powi(p)))
                }
            }
        };
        let alpha = term(q, 1).add(&term(-1.0 / q, -1));
        let beta = term(c(1.0), 1).add(&term(c(-1.0), -1));
        let gamma = LaurentOperator::constant(id.scale(q - 1.0 / q));
        let mut m = OperatorLaurentMatrix::zeros(4, 4, d, s);
        m.set(0, 0, alpha.clone());
        m.set(3, 3, alpha);
        m.set(1, 1, beta.clone());
        m.set(2, 2, beta);
        m.set(1, 2, gamma.clone());
        m.set(2, 1, gamma);
        m
    }

    fn identity2(&self) -> OperatorLaurentMatrix {
        let (d, s) = self.dims();
        OperatorLaurentMatrix::identity(2, d, s)
    }

    /// `T(hi, lo) = L_hi ⋯ L_lo` (empty when `hi = lo - 1`), or for `hatted`,
    /// `T̂(lo, hi) = L̂_lo ⋯ L̂_hi`. Spectral variable `u`.
    pub fn monodromy(&self, hi: usize, lo: usize, hatted: bool, mode: Spectral) -> Result<OperatorLaurentMatrix, LaxError> {
        let n = self.ops.spec.n;
        if lo < 1 || hi > n || hi + 1 < lo {
            return Err(LaxError::BadRange { hi, lo, n });
        }
        let mut out = self.identity2();
        if hatted {
            for k in lo..=hi {
                out = out.mul(&self.hat_l(k, Var::U, mode)?);
            }
        } else {
            for k in (lo..=hi).rev() {
                out = out.mul(&self.l(k, Var::U, mode)?);
            }
        }
        Ok(out)
    }

    fn partial(&self, hi: usize, lo: usize, hatted: bool, mode: Spectral) -> Result<OperatorLaurentMatrix, LaxError> {
        if hi + 1 == lo {
            return Ok(self.identity2());
        }
        self.monodromy(hi, lo, hatted, mode)
    }

    pub fn transfer_closed(&self, mode: Spectral) -> Result<LaurentOperator, LaxError> {
        Ok(self.monodromy(self.ops.spec.n, 1, false, mode)?.trace())
    }

    /// `tr(T K^- T̂ K^+)` with `K^± = 1`.
    pub fn transfer_open(&self, mode: Spectral) -> Result<LaurentOperator, LaxError> {
        let n = self.ops.spec.n;
        let t = self.monodromy(n, 1, false, mode)?;
        let th = self.monodromy(n, 1, true, mode)?;
        Ok(t.mul(&th).trace())
    }

    /// `tr(L̂_1 ⋯ L̂_N)`.
    pub fn transfer_hat(&self, mode: Spectral) -> Result<LaurentOperator, LaxError> {
        Ok(self.monodromy(self.ops.spec.n, 1, true, mode)?.trace())
    }

    /// Transfer matrix for the chain's boundary type.
    pub fn transfer(&self, mode: Spectral) -> Result<LaurentOperator, LaxError> {
        match self.ops.spec.boundary {
            Boundary::Periodic => self.transfer_closed(mode),
            Boundary::Open => self.transfer_open(mode),
        }
    }

    fn check_generator_site(&self, n: usize) -> Result<(), LaxError> {
        let nn = self.ops.spec.n;
        if n < 1 || n > nn + 1 {
            return Err(LaxError::BadRange { hi: n, lo: n, n: nn });
        }
        Ok(())
    }

    /// `𝔹_n = tr_a{T_a(N, n) R_ab(u/w) T_a(n-1, 1)}`, `1 <= n <= N+1`.
    pub fn generator_b_closed(&self, n: usize, mode: Spectral) -> Result<OperatorLaurentMatrix, LaxError> {
        self.check_generator_site(n)?;
        let nn = self.ops.spec.n;
        let left = self.partial(nn, n, false, mode)?.embed_a();
        let right = self.partial(n - 1, 1, false, mode)?.embed_a();
        Ok(OperatorLaurentMatrix::product(&[left, self.r(RArg::Ratio, mode), right]).partial_trace_a())
    }

    /// `tr_a{T⁺ L_an R(x1) T⁻ T̂⁻ R(x2) L̂_an T̂⁺}` with `K^± = 1`; at `n = N+1` the site
    /// factors are absent.
    fn open_b(&self, n: usize, first: RArg, second: RArg, mode: Spectral) -> Result<OperatorLaurentMatrix, LaxError> {
        self.check_generator_site(n)?;
        let nn = self.ops.spec.n;
        let (ln, lhn) = if n <= nn {
            (self.l(n, Var::U, mode)?, self.hat_l(n, Var::U, mode)?)
        } else {
            (self.identity2(), self.identity2())
        };
        let top = (n + 1).min(nn + 1);
        let t_plus = self.partial(nn, top, false, mode)?;
        let t_minus = self.partial(n - 1, 1, false, mode)?;
        let th_minus = self.partial(n - 1, 1, true, mode)?;
        let th_plus = self.partial(nn, top, true, mode)?;
        let left = t_plus.mul(&ln).embed_a();
        let mid = t_minus.mul(&th_minus).embed_a();
        let right = lhn.mul(&th_plus).embed_a();
        Ok(OperatorLaurentMatrix::product(&[left, self.r(first, mode), mid, self.r(second, mode), right])
            .partial_trace_a())
    }

    pub fn generator_b_open(&self, n: usize, mode: Spectral) -> Result<OperatorLaurentMatrix, LaxError> {
        self.open_b(n, RArg::Ratio, RArg::Product, mode)
    }

    /// `tr_a{T̂(1, n-1) R(u/w) T̂(n, N)}`.
    pub fn generator_b_hat_closed(&self, n: usize, mode: Spectral) -> Result<OperatorLaurentMatrix, LaxError> {
        self.check_generator_site(n)?;
        let nn = self.ops.spec.n;
        let left = self.partial(n - 1, 1, true, mode)?.embed_a();
        let right = self.partial(nn, n, true, mode)?.embed_a();
        Ok(OperatorLaurentMatrix::product(&[left, self.r(RArg::Ratio, mode), right]).partial_trace_a())
    }

    /// `𝔸_n = 𝔱 · 1 - 𝔹_n` for the requested family.
    pub fn generator_a(&self, n: usize, kind: GeneratorKind, mode: Spectral) -> Result<OperatorLaurentMatrix, LaxError> {
        let (t, b) = match kind {
            GeneratorKind::Closed => (self.transfer_closed(mode)?, self.generator_b_closed(n, mode)?),
            GeneratorKind::Open => (self.transfer_open(mode)?, self.generator_b_open(n, mode)?),
            GeneratorKind::HattedClosed => (self.transfer_hat(mode)?, self.generator_b_hat_closed(n, mode)?),
            GeneratorKind::HattedOpen => (self.transfer_open(mode)?, self.open_b(n, RArg::Product, RArg::Ratio, mode)?),
        };
        Ok(OperatorLaurentMatrix::scalar_diag(2, &t).sub(&b))
    }

    pub fn extract_hamiltonians(&self) -> Result<Hamiltonians, LaxError> {
        let spec = self.ops.spec;
        let t = self.transfer(Spectral::Symbolic)?;
        let p = match spec.boundary {
            Boundary::Periodic => spec.n as i32,
            Boundary::Open => 2 * spec.n as i32,
        };
        let coef = |k: i32| t.coefficient(k, 0);
        let (hp0, hp1, hp2) = (coef(p), coef(p - 1), coef(p - 2));
        let (hm0, hm1, hm2) = (coef(-p), coef(-p + 1), coef(-p + 2));
        let inv = |h: &SparseOperator, name: &str| {
            h.pruned(1e-14)
                .diagonal_inverse()
                .ok_or_else(|| LaxError::NonInvertibleLeading(name.to_string()))
        };
        let h_plus = &inv(&hp0, "H(+,0)")? * &hp2;
        let h_minus = &inv(&hm0, "H(-,0)")? * &hm2;
        let q = spec.q;
        let h_phys = match spec.boundary {
            Boundary::Periodic => &h_plus.scale(q) + &h_minus.scale(1.0 / q),
            Boundary::Open => h_plus.scale(q),
        };
        Ok(Hamiltonians {
            top_power: p,
            h_plus0: hp0,
            h_plus1: hp1,
            h_plus2: hp2,
            h_minus0: hm0,
            h_minus1: hm1,
            h_minus2: hm2,
            h_plus,
            h_minus,
            h_phys,
        })
    }

    /// `(B^{(±,0)})^-1 B^{(±,2)}` from a symbolic generator `𝔹`, expanding about
    /// `u -> ∞` (`plus`) or `u -> 0`.
    pub fn normalized_b(&self, b: &OperatorLaurentMatrix, plus: bool) -> Result<(OperatorLaurentMatrix, OperatorLaurentMatrix, OperatorLaurentMatrix), LaxError> {
        let powers = b.pruned(1e-13).u_powers();
        let (&lo, &hi) = match (powers.first(), powers.last()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(LaxError::NonInvertibleLeading("empty generator".into())),
        };
        let (p0, p2) = if plus { (hi, hi - 2) } else { (lo, lo + 2) };
        let b0 = b.coefficient_u(p0);
        let b2 = b.coefficient_u(p2);
        let norm = b0.diagonal_monomial_inverse()?.mul(&b2);
        Ok((b0, b2, norm))
    }
}

impl LaxModel {
    /// `𝔸^± = H^± 1 - (B^{(±,0)})^-1 B^{(±,2)}` (periodic) or `qH^+ 1 - q B^+` (open), as a
    /// polynomial in `w`.
    pub fn expanded_generator(&self, n: usize, plus: bool, h: &Hamiltonians) -> Result<OperatorLaurentMatrix, LaxError> {
        match self.ops.spec.boundary {
            Boundary::Periodic => {
                let b = self.generator_b_closed(n, Spectral::Symbolic)?;
                let (_, _, bn) = self.normalized_b(&b, plus)?;
                let hh = if plus { &h.h_plus } else { &h.h_minus };
                Ok(OperatorLaurentMatrix::scalar_diag(2, &LaurentOperator::constant(hh.clone())).sub(&bn))
            }
            Boundary::Open => {
                let b = self.generator_b_open(n, Spectral::Symbolic)?;
                let (_, _, bn) = self.normalized_b(&b, plus)?;
                let (hh, s) = if plus { (&h.h_plus, self.q()) } else { (&h.h_minus, 1.0 / self.q()) };
                Ok(OperatorLaurentMatrix::scalar_diag(2, &LaurentOperator::constant(hh.clone())).sub(&bn).scale(s))
            }
        }
    }
}

/// Laurent coefficients of the transfer matrix and the derived Hamiltonians.
#[derive(Debug, Clone)]
pub struct Hamiltonians {
    /// `P = N` (periodic) or `2N` (open).
    pub top_power: i32,
    pub h_plus0: SparseOperator,
    pub h_plus1: SparseOperator,
    pub h_plus2: SparseOperator,
    pub h_minus0: SparseOperator,
    pub h_minus1: SparseOperator,
    pub h_minus2: SparseOperator,
    pub h_plus: SparseOperator,
    pub h_minus: SparseOperator,
    pub h_phys: SparseOperator,
}

pub fn build_l(model: &LaxModel, n: usize) -> Result<OperatorLaurentMatrix, LaxError> {
    model.l(n, Var::U, Spectral::Symbolic)
}

pub fn build_hat_l(model: &LaxModel, n: usize) -> Result<OperatorLaurentMatrix, LaxError> {
    model.hat_l(n, Var::U, Spectral::Symbolic)
}

pub fn build_r(model: &LaxModel) -> OperatorLaurentMatrix {
    model.r(RArg::Ratio, Spectral::Symbolic)
}

#[cfg(test)]
mod tests;
