//! Truncated Fock representation of the q-oscillator and its N-site tensor products.
//!
//! Single site, cutoff `D`:
//! `v|m> = q^{-m-1/2}|m>`, `a|m> = (1 - q^{-2m})|m-1>`, `a^+|m> = |m+1>` (zero at the top),
//! `b = v^-1 a`, `b^+ = v^-1 a^+`. Site 1 is the rightmost tensor factor, so the chain
//! index of `(m_1, .., m_N)` is `sum_i m_i D^{i-1}`.

use faer::complex_native::c64;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("invalid chain spec: {0}")]
    InvalidSpec(String),
    #[error("site {site} out of range 1..={n}")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n: usize,
    pub d: usize,
    pub q: Complex64,
    pub boundary: Boundary,
}

impl ChainSpec {
    pub fn new(n: usize, d: usize, q: Complex64, boundary: Boundary) -> Self {
        Self { n, d, q, boundary }
    }

    /// N=3, D=5, q = e^{0.7i}.
    pub fn default_periodic() -> Self {
        Self::new(3, 5, Complex64::from_polar(1.0, 0.7), Boundary::Periodic)
    }

    pub fn default_open() -> Self {
        Self { boundary: Boundary::Open, ..Self::default_periodic() }
    }

    pub fn with_boundary(self, boundary: Boundary) -> Self {
        Self { boundary, ..self }
    }

    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn validate(&self) -> Result<(), FockError> {
        if self.n < 1 {
            return Err(FockError::InvalidSpec("N must be at least 1".into()));
        }
        if self.d < 2 {
            return Err(FockError::InvalidSpec("D must be at least 2".into()));
        }
        let q = self.q;
        if !q.re.is_finite() || !q.im.is_finite() || q.norm() < 1e-12 {
            return Err(FockError::InvalidSpec("q must be finite and nonzero".into()));
        }
        for k in 1..=self.d {
            if (q.powi(2 * k as i32) - 1.0).norm() <= 1e-8 {
                return Err(FockError::InvalidSpec(format!(
                    "q is (numerically) a root of unity: |q^{} - 1| <= 1e-8",
                    2 * k
                )));
            }
        }
        Ok(())
    }

    /// Occupations `(m_1, .., m_N)` of a chain basis index.
    pub fn occupations(&self, mut idx: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            out.push(idx % self.d);
            idx /= self.d;
        }
        out
    }

    pub fn index_of(&self, occ: &[usize]) -> usize {
        occ.iter().rev().fold(0, |acc, &m| acc * self.d + m)
    }
}

/// A sparse complex operator on `sites` copies of a `d`-dimensional Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    d: usize,
    sites: usize,
    mat: CsMat<Complex64>,
}

fn zc() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl SparseOperator {
    pub fn from_triplets(d: usize, sites: usize, entries: &[(usize, usize, Complex64)]) -> Self {
        let dim = d.pow(sites as u32);
        let mut t = TriMat::new((dim, dim));
        for &(r, c, v) in entries {
            if v != zc() {
                t.add_triplet(r, c, v);
            }
        }
        Self { d, sites, mat: t.to_csr() }
    }

    pub fn identity(d: usize, sites: usize) -> Self {
        Self { d, sites, mat: CsMat::eye(d.pow(sites as u32)) }
    }

    pub fn zero(d: usize, sites: usize) -> Self {
        let dim = d.pow(sites as u32);
        Self { d, sites, mat: CsMat::zero((dim, dim)) }
    }

    pub fn diagonal(d: usize, sites: usize, diag: &[Complex64]) -> Self {
        let e: Vec<_> = diag.iter().enumerate().map(|(i, &x)| (i, i, x)).collect();
        Self::from_triplets(d, sites, &e)
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    /// Canonical entries `(row, col, value)`, row-major, duplicates merged.
    pub fn entries(&self) -> Vec<(usize, usize, Complex64)> {
        self.mat.iter().map(|(v, (r, c))| (r, c, *v)).collect()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.mat.get(r, c).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.mat.data().iter().all(|x| *x == zc())
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.data().iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        if c == zc() {
            return Self::zero(self.d, self.sites);
        }
        Self { d: self.d, sites: self.sites, mat: self.mat.map(|x| x * c) }
    }

    /// Removes stored entries with magnitude at or below `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let e: Vec<_> = self.entries().into_iter().filter(|(_, _, v)| v.norm() > tol).collect();
        Self::from_triplets(self.d, self.sites, &e)
    }

    pub fn transpose(&self) -> Self {
        Self { d: self.d, sites: self.sites, mat: self.mat.transpose_view().to_csr() }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn is_diagonal(&self) -> bool {
        self.mat.iter().all(|(v, (r, c))| r == c || *v == zc())
    }

    pub fn diagonal_entries(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// Inverse of a diagonal operator with no (numerically) zero entries.
    pub fn diagonal_inverse(&self) -> Option<Self> {
        if !self.is_diagonal() {
            return None;
        }
        let d = self.diagonal_entries();
        if d.iter().any(|x| x.norm() < 1e-300) {
            return None;
        }
        let inv: Vec<_> = d.iter().map(|x| 1.0 / x).collect();
        Some(Self::diagonal(self.d, self.sites, &inv))
    }

    /// `self ⊗ other`, with `other` as the right (faster) factor.
    pub fn kron(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d, "kron of operators with different local cutoffs");
        let od = other.dim();
        let oe = other.entries();
        let mut e = Vec::with_capacity(self.nnz() * oe.len());
        for (r1, c1, v1) in self.entries() {
            for &(r2, c2, v2) in &oe {
                e.push((r1 * od + r2, c1 * od + c2, v1 * v2));
            }
        }
        Self::from_triplets(self.d, self.sites + other.sites, &e)
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![zc(); self.dim()];
        for (v, (r, c)) in self.mat.iter() {
            y[r] += v * x[c];
        }
        y
    }

    pub fn dense_block(&self, rows: &[usize], cols: &[usize]) -> Mat<c64> {
        Mat::from_fn(rows.len(), cols.len(), |i, j| {
            let z = self.get(rows[i], cols[j]);
            c64::new(z.re, z.im)
        })
    }

    fn check_same(&self, o: &Self) {
        assert_eq!(self.dim(), o.dim(), "operator dimension mismatch");
    }
}

impl Mul for &SparseOperator {
    type Output = SparseOperator;
    fn mul(self, o: &SparseOperator) -> SparseOperator {
        self.check_same(o);
        SparseOperator { d: self.d, sites: self.sites, mat: &self.mat * &o.mat }
    }
}

impl Add for &SparseOperator {
    type Output = SparseOperator;
    fn add(self, o: &SparseOperator) -> SparseOperator {
        self.check_same(o);
        SparseOperator { d: self.d, sites: self.sites, mat: &self.mat + &o.mat }
    }
}

impl Sub for &SparseOperator {
    type Output = SparseOperator;
    fn sub(self, o: &SparseOperator) -> SparseOperator {
        self.check_same(o);
        SparseOperator { d: self.d, sites: self.sites, mat: &self.mat - &o.mat }
    }
}

impl Neg for &SparseOperator {
    type Output = SparseOperator;
    fn neg(self) -> SparseOperator {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// Single-site generators.
#[derive(Debug, Clone)]
pub struct SiteOps {
    pub v: SparseOperator,
    pub v_inv: SparseOperator,
    pub a: SparseOperator,
    pub a_dag: SparseOperator,
    pub b: SparseOperator,
    pub b_dag: SparseOperator,
}

pub fn site_operators(spec: &ChainSpec) -> Result<SiteOps, FockError> {
    spec.validate()?;
    let (d, q) = (spec.d, spec.q);
    let sqrt_q = q.sqrt();
    let vd: Vec<Complex64> = (0..d).map(|m| q.powi(-(m as i32)) / sqrt_q).collect();
    let vi: Vec<Complex64> = vd.iter().map(|x| 1.0 / x).collect();
    let v = SparseOperator::diagonal(d, 1, &vd);
    let v_inv = SparseOperator::diagonal(d, 1, &vi);
    let a_e: Vec<_> = (1..d).map(|m| (m - 1, m, 1.0 - q.powi(-2 * m as i32))).collect();
    let ad_e: Vec<_> = (0..d - 1).map(|m| (m + 1, m, Complex64::new(1.0, 0.0))).collect();
    let a = SparseOperator::from_triplets(d, 1, &a_e);
    let a_dag = SparseOperator::from_triplets(d, 1, &ad_e);
    let b = &v_inv * &a;
    let b_dag = &v_inv * &a_dag;
    Ok(SiteOps { v, v_inv, a, a_dag, b, b_dag })
}

/// Places a single-site operator at site `n` (1-based, site 1 rightmost).
pub fn embed(op: &SparseOperator, n: usize, spec: &ChainSpec) -> Result<SparseOperator, FockError> {
    if n < 1 || n > spec.n {
        return Err(FockError::SiteOutOfRange { site: n, n: spec.n });
    }
    if op.dim() != spec.d {
        return Err(FockError::DimensionMismatch(op.dim(), spec.d));
    }
    let d = spec.d;
    let lo = d.pow((n - 1) as u32);
    let hi = d.pow((spec.n - n) as u32);
    let oe = op.entries();
    let mut e = Vec::with_capacity(oe.len() * lo * hi);
    for h in 0..hi {
        for &(r, c, v) in &oe {
            for l in 0..lo {
                e.push(((h * d + r) * lo + l, (h * d + c) * lo + l, v));
            }
        }
    }
    Ok(SparseOperator::from_triplets(d, spec.n, &e))
}

/// Chain basis indices whose every occupation is at most `D-1-r`.
pub fn safe_columns(d: usize, sites: usize, r: usize) -> Vec<usize> {
    if r >= d {
        return Vec::new();
    }
    let lim = d - 1 - r;
    (0..d.pow(sites as u32))
        .filter(|&idx| {
            let mut x = idx;
            (0..sites).all(|_| {
                let m = x % d;
                x /= d;
                m <= lim
            })
        })
        .collect()
}

/// Max entry of `lhs - rhs` over truncation-safe columns, normalized by
/// `max(1, |lhs|_max, |rhs|_max)`.
pub fn safe_residual(lhs: &SparseOperator, rhs: &SparseOperator, r: usize) -> Result<f64, FockError> {
    if lhs.dim() != rhs.dim() {
        return Err(FockError::DimensionMismatch(lhs.dim(), rhs.dim()));
    }
    let diff = lhs - rhs;
    let safe = safe_columns(lhs.local_dim(), lhs.sites(), r);
    let mut keep = vec![false; lhs.dim()];
    for c in safe {
        keep[c] = true;
    }
    let num = diff
        .entries()
        .iter()
        .filter(|(_, c, _)| keep[*c])
        .map(|(_, _, v)| v.norm())
        .fold(0.0, f64::max);
    Ok(num / 1f64.max(lhs.max_abs()).max(rhs.max_abs()))
}

/// Embedded generators for every site of a chain.
#[derive(Debug, Clone)]
pub struct ChainOps {
    pub spec: ChainSpec,
    pub local: SiteOps,
    pub identity: SparseOperator,
    v: Vec<SparseOperator>,
    v_inv: Vec<SparseOperator>,
    a: Vec<SparseOperator>,
    a_dag: Vec<SparseOperator>,
    b: Vec<SparseOperator>,
    b_dag: Vec<SparseOperator>,
}

impl ChainOps {
    pub fn new(spec: &ChainSpec) -> Result<Self, FockError> {
        let local = site_operators(spec)?;
        let emb = |op: &SparseOperator| -> Result<Vec<SparseOperator>, FockError> {
            (1..=spec.n).map(|n| embed(op, n, spec)).collect()
        };
        Ok(Self {
            spec: *spec,
            identity: SparseOperator::identity(spec.d, spec.n),
            v: emb(&local.v)?,
            v_inv: emb(&local.v_inv)?,
            a: emb(&local.a)?,
            a_dag: emb(&local.a_dag)?,
            b: emb(&local.b)?,
            b_dag: emb(&local.b_dag)?,
            local,
        })
    }

    /// Periodic site label: 0 -> N, N+1 -> 1.
    pub fn wrap(&self, n: i64) -> usize {
        let nn = self.spec.n as i64;
        ((n - 1).rem_euclid(nn) + 1) as usize
    }

    pub fn v(&self, n: usize) -> &SparseOperator {
        &self.v[n - 1]
    }
    pub fn v_inv(&self, n: usize) -> &SparseOperator {
        &self.v_inv[n - 1]
    }
    pub fn a(&self, n: usize) -> &SparseOperator {
        &self.a[n - 1]
    }
    pub fn a_dag(&self, n: usize) -> &SparseOperator {
        &self.a_dag[n - 1]
    }
    pub fn b(&self, n: usize) -> &SparseOperator {
        &self.b[n - 1]
    }
    pub fn b_dag(&self, n: usize) -> &SparseOperator {
        &self.b_dag[n - 1]
    }

    pub fn zero(&self) -> SparseOperator {
        SparseOperator::zero(self.spec.d, self.spec.n)
    }

    pub fn scalar(&self, c: Complex64) -> SparseOperator {
        self.identity.scale(c)
    }
}

/// Basis of the total-occupation sector `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBasis {
    pub m: usize,
    /// Occupation tuples `(m_1, .., m_N)`, lexicographic.
    pub states: Vec<Vec<usize>>,
    /// Chain index of each state (the projection map).
    pub indices: Vec<usize>,
}

impl SectorBasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Position of a chain index inside the sector, if it belongs to it.
    pub fn position(&self, chain_index: usize) -> Option<usize> {
        self.indices.iter().position(|&i| i == chain_index)
    }
}

pub fn sector_basis(spec: &ChainSpec, m: usize) -> SectorBasis {
    fn rec(n: usize, left: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for x in 0..=left.min(cap) {
            cur.push(x);
            rec(n, left - x, cap, cur, out);
            cur.pop();
        }
    }
    let mut states = Vec::new();
    rec(spec.n, m, spec.d - 1, &mut Vec::new(), &mut states);
    let indices = states.iter().map(|s| spec.index_of(s)).collect();
    SectorBasis { m, states, indices }
}

/// Chain indices of all states with total occupation at most `m_max`, ascending.
pub fn sectors_up_to(spec: &ChainSpec, m_max: usize) -> Vec<usize> {
    (0..spec.dim()).filter(|&i| spec.occupations(i).iter().sum::<usize>() <= m_max).collect()
}
