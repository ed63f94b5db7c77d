//! Bethe ansatz: root solving, the spectrum formulas, comparison with exact sector
//! diagonalization of the transfer matrices, and small-sector time evolution.
//!
//! Conventions: `q = e^{iμ}` with `iμ = ln q` (principal), spectral parameter `u = e^λ`.

use crate::fockspace::{sector_basis, sectors_up_to, Boundary, ChainSpec, SparseOperator};
use crate::laxkit::{LaxError, LaxModel, Spectral};
use crate::verify::solve_dense;
use faer::complex_native::c64;
use faer::prelude::SolverCore;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

const MAX_ITER: usize = 200;
const CONTINUATION_STEPS: usize = 10;
const NEWTON_TOL: f64 = 1e-12;
const ACCEPT_RESIDUAL: f64 = 1e-10;
const DISTINCT: f64 = 1e-8;
const POLE_GUARD: f64 = 1e-4;
/// Largest dense block we are willing to diagonalize.
pub const MAX_SECTOR_DIM: usize = 2000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BetheError {
    #[error("Newton iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("roots collide: {0}")]
    CollidingRoots(String),
    #[error("spectral point within {POLE_GUARD} of root {index}")]
    NearPole { index: usize },
    #[error("sector too large: {0}")]
    SectorTooLarge(String),
    #[error("no eigenvalue within tolerance (max mismatch {mismatch:.3e})")]
    NoEigenvalueWithin { mismatch: f64, report: Box<SpectrumReport> },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Lax(#[from] LaxError),
}

fn ci(x: f64) -> Complex64 {
    Complex64::new(0.0, x)
}

fn to_c64(z: Complex64) -> c64 {
    c64::new(z.re, z.im)
}

fn from_c64(z: c64) -> Complex64 {
    Complex64::new(z.re, z.im)
}

/// `iμ` for the given `q`.
pub fn i_mu(q: Complex64) -> Complex64 {
    q.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheRootSet {
    pub n: usize,
    pub q: Complex64,
    pub m: usize,
    pub boundary: Boundary,
    pub roots: Vec<Complex64>,
    pub quantum_numbers: Vec<i64>,
    /// Max defect of the multiplicative equations, relative to the larger side.
    pub residual: f64,
}

impl BetheRootSet {
    /// The magnon-free reference state.
    pub fn vacuum(n: usize, q: Complex64, boundary: Boundary) -> Self {
        Self { n, q, m: 0, boundary, roots: vec![], quantum_numbers: vec![], residual: 0.0 }
    }

    /// Same set with every root moved by `shift`. The residual is recomputed.
    pub fn shifted(&self, shift: Complex64) -> Self {
        let roots: Vec<_> = self.roots.iter().map(|r| r + shift).collect();
        let residual = bae_residual(self.n, self.q, self.boundary, &roots);
        Self { roots, residual, ..self.clone() }
    }
}

/// Distance of `z` to the lattice `iπZ`.
fn dist_mod_ipi(z: Complex64) -> f64 {
    let k = (z.im / PI).round();
    (z - ci(k * PI)).norm()
}

fn check_distinct(boundary: Boundary, roots: &[Complex64]) -> Result<(), BetheError> {
    for i in 0..roots.len() {
        for j in 0..i {
            if dist_mod_ipi(roots[i] - roots[j]) <= DISTINCT {
                return Err(BetheError::CollidingRoots(format!("λ{i} ≈ λ{j}")));
            }
            if boundary == Boundary::Open && dist_mod_ipi(roots[i] + roots[j]) <= DISTINCT {
                return Err(BetheError::CollidingRoots(format!("λ{i} ≈ -λ{j}")));
            }
        }
    }
    Ok(())
}

/// Two-body scattering factor `sinh(x + iμ) / sinh(x - iμ)`.
fn scatter(x: Complex64, imu: Complex64) -> Complex64 {
    (x + imu).sinh() / (x - imu).sinh()
}

/// `(LHS_i, RHS_i)` of the multiplicative equations.
fn bae_sides(n: usize, q: Complex64, boundary: Boundary, roots: &[Complex64], i: usize) -> (Complex64, Complex64) {
    let imu = i_mu(q);
    let nn = n as f64;
    let li = roots[i];
    let mut rhs = Complex64::new(1.0, 0.0);
    for (j, &lj) in roots.iter().enumerate() {
        if j == i {
            continue;
        }
        rhs *= scatter(li - lj, imu);
        if boundary == Boundary::Open {
            rhs *= scatter(li + lj, imu);
        }
    }
    let lhs = match boundary {
        Boundary::Periodic => (-1.0 / q).powf(nn) * (2.0 * nn * li).exp(),
        Boundary::Open => (4.0 * nn * li).exp(),
    };
    (lhs, rhs)
}

/// Max relative defect of the multiplicative equations.
pub fn bae_residual(n: usize, q: Complex64, boundary: Boundary, roots: &[Complex64]) -> f64 {
    (0..roots.len())
        .map(|i| {
            let (l, r) = bae_sides(n, q, boundary, roots, i);
            (l - r).norm() / l.norm().max(r.norm()).max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Logarithmic equations with the interaction scaled by `s`, and their Jacobian.
///
/// Periodic: `2Nλ_i - N(iμ + iπ) - s Σ log S(λ_i - λ_j) - 2πi k_i`, using `log(-q) = iμ + iπ`.
/// Open: `4Nλ_i - s Σ [log S(λ_i - λ_j) + log S(λ_i + λ_j)] - 2πi k_i`.
struct LogSystem<'a> {
    n: usize,
    imu: Complex64,
    boundary: Boundary,
    k: &'a [i64],
}

impl LogSystem<'_> {
    fn slope(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => 2.0 * self.n as f64,
            Boundary::Open => 4.0 * self.n as f64,
        }
    }

    fn offset(&self, i: usize) -> Complex64 {
        let base = match self.boundary {
            Boundary::Periodic => (self.imu + ci(PI)) * self.n as f64,
            Boundary::Open => Complex64::new(0.0, 0.0),
        };
        base + ci(2.0 * PI * self.k[i] as f64)
    }

    fn log_s(&self, x: Complex64) -> Complex64 {
        (x + self.imu).sinh().ln() - (x - self.imu).sinh().ln()
    }

    fn dlog_s(&self, x: Complex64) -> Complex64 {
        1.0 / (x + self.imu).tanh() - 1.0 / (x - self.imu).tanh()
    }

    /// Free-magnon roots (`s = 0`).
    fn free(&self) -> Vec<Complex64> {
        (0..self.k.len()).map(|i| self.offset(i) / self.slope()).collect()
    }

    fn eval(&self, x: &[Complex64], s: f64) -> Vec<Complex64> {
        (0..x.len())
            .map(|i| {
                let mut f = x[i] * self.slope() - self.offset(i);
                for j in 0..x.len() {
                    if j == i {
                        continue;
                    }
                    f -= self.log_s(x[i] - x[j]) * s;
                    if self.boundary == Boundary::Open {
                        f -= self.log_s(x[i] + x[j]) * s;
                    }
                }
                f
            })
            .collect()
    }

    fn jacobian(&self, x: &[Complex64], s: f64) -> Vec<Vec<Complex64>> {
        let m = x.len();
        let mut jac = vec![vec![Complex64::new(0.0, 0.0); m]; m];
        for i in 0..m {
            jac[i][i] += self.slope();
            for j in 0..m {
                if j == i {
                    continue;
                }
                let d = self.dlog_s(x[i] - x[j]) * s;
                jac[i][i] -= d;
                jac[i][j] += d;
                if self.boundary == Boundary::Open {
                    let e = self.dlog_s(x[i] + x[j]) * s;
                    jac[i][i] -= e;
                    jac[i][j] -= e;
                }
            }
        }
        jac
    }
}

fn norm_inf(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Damped Newton: halve the step until the defect decreases.
fn newton(sys: &LogSystem, mut x: Vec<Complex64>, s: f64) -> Result<(Vec<Complex64>, usize), BetheError> {
    let mut f = sys.eval(&x, s);
    for it in 0..MAX_ITER {
        let fx = norm_inf(&f);
        if !fx.is_finite() {
            return Err(BetheError::NoConvergence(format!("non-finite defect at s = {s}")));
        }
        if fx < NEWTON_TOL {
            return Ok((x, it));
        }
        let step = solve_dense(sys.jacobian(&x, s), f.iter().map(|z| -z).collect());
        if step.iter().any(|z| !z.is_finite()) {
            return Err(BetheError::NoConvergence(format!("singular Jacobian at s = {s}")));
        }
        let mut t = 1.0;
        loop {
            let trial: Vec<_> = x.iter().zip(&step).map(|(a, d)| a + d * t).collect();
            let ft = sys.eval(&trial, s);
            let nt = norm_inf(&ft);
            if nt.is_finite() && (nt < fx || t < 1e-4) {
                x = trial;
                f = ft;
                break;
            }
            t *= 0.5;
        }
    }
    let fx = norm_inf(&f);
    if fx < NEWTON_TOL {
        Ok((x, MAX_ITER))
    } else {
        Err(BetheError::NoConvergence(format!("defect {fx:.3e} after {MAX_ITER} iterations at s = {s}")))
    }
}

/// Solve the Bethe equations for the given branch integers.
///
/// Periodic: `(-q^-1)^N e^{2Nλ_i} = Π_{j≠i} S(λ_i - λ_j)`; open:
/// `e^{4Nλ_i} = Π_{j≠i} S(λ_i - λ_j) S(λ_i + λ_j)` with `S(x) = sinh(x + iμ)/sinh(x - iμ)`.
/// `M = 1` starts from the closed form (one Newton polish); `M >= 2` continues from free magnons
/// in ten steps of the interaction strength.
pub fn solve_bae(
    n: usize,
    q: Complex64,
    boundary: Boundary,
    quantum_numbers: &[i64],
) -> Result<BetheRootSet, BetheError> {
    let m = quantum_numbers.len();
    if m == 0 {
        return Err(BetheError::Invalid("M must be at least 1".into()));
    }
    if n == 0 {
        return Err(BetheError::Invalid("N must be at least 1".into()));
    }
    let sys = LogSystem { n, imu: i_mu(q), boundary, k: quantum_numbers };
    let start = sys.free();
    check_distinct(boundary, &start)?;
    let roots = if m == 1 {
        newton(&sys, start, 1.0)?.0
    } else {
        let mut x = start;
        for step in 1..=CONTINUATION_STEPS {
            let s = step as f64 / CONTINUATION_STEPS as f64;
            x = newton(&sys, x, s)
                .map_err(|e| BetheError::NoConvergence(format!("continuation step {step}: {e}")))?
                .0;
        }
        x
    };
    check_distinct(boundary, &roots)?;
    let residual = bae_residual(n, q, boundary, &roots);
    if residual >= ACCEPT_RESIDUAL {
        return Err(BetheError::NoConvergence(format!("accepted defect {residual:.3e}")));
    }
    Ok(BetheRootSet { n, q, m, boundary, roots, quantum_numbers: quantum_numbers.to_vec(), residual })
}

/// `iμ/2 + iπ/2 + iπk/N`, the one-magnon periodic root.
pub fn periodic_one_magnon(n: usize, q: Complex64, k: i64) -> Complex64 {
    i_mu(q) / 2.0 + ci(PI / 2.0 + PI * k as f64 / n as f64)
}

/// Newton steps the solver needs from a given start (for fixed-point checks).
pub fn newton_steps_from(set: &BetheRootSet) -> Result<usize, BetheError> {
    let sys = LogSystem { n: set.n, imu: i_mu(set.q), boundary: set.boundary, k: &set.quantum_numbers };
    Ok(newton(&sys, set.roots.clone(), 1.0)?.1)
}

/// Branch integers `0..N` for `M` magnons, strictly increasing.
pub fn default_quantum_numbers(n: usize, m: usize) -> Vec<Vec<i64>> {
    fn rec(lo: i64, hi: i64, left: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for k in lo..hi {
            cur.push(k);
            rec(k + 1, hi, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n as i64, m, &mut Vec::new(), &mut out);
    out
}

/// The spectrum formula at `λ`.
///
/// Periodic: `e^{Nλ} Π sinh(λ-λ_k-iμ)/sinh(λ-λ_k) + (-1)^N e^{-Nλ} Π sinh(λ-λ_k+iμ)/sinh(λ-λ_k)`.
/// Open: `q^N e^{2Nλ} Π sinh(λ-λ_k-iμ) sinh(λ+λ_k)/sinh²(λ-λ_k)
///      + q^-N e^{-2Nλ} Π sinh(λ-λ_k+iμ) sinh(λ+λ_k+2iμ)/sinh²(λ-λ_k)`.
pub fn lambda_eval(set: &BetheRootSet, lambda: Complex64) -> Result<Complex64, BetheError> {
    for (index, &r) in set.roots.iter().enumerate() {
        if dist_mod_ipi(lambda - r) <= POLE_GUARD {
            return Err(BetheError::NearPole { index });
        }
    }
    let imu = i_mu(set.q);
    let nn = set.n as f64;
    let one = Complex64::new(1.0, 0.0);
    Ok(match set.boundary {
        Boundary::Periodic => {
            let (mut p1, mut p2) = (one, one);
            for &r in &set.roots {
                let den = (lambda - r).sinh();
                p1 *= (lambda - r - imu).sinh() / den;
                p2 *= (lambda - r + imu).sinh() / den;
            }
            let sign = if set.n.is_multiple_of(2) { 1.0 } else { -1.0 };
            (nn * lambda).exp() * p1 + (-nn * lambda).exp() * p2 * sign
        }
        Boundary::Open => {
            let (mut p1, mut p2) = (one, one);
            for &r in &set.roots {
                let den = (lambda - r).sinh();
                p1 *= (lambda - r - imu).sinh() / den * (lambda + r).sinh() / den;
                p2 *= (lambda - r + imu).sinh() / den * (lambda + r + imu * 2.0).sinh() / den;
            }
            set.q.powf(nn) * (2.0 * nn * lambda).exp() * p1 + set.q.powf(-nn) * (-2.0 * nn * lambda).exp() * p2
        }
    })
}

/// Spread `max |Λ(z) - Λ(z')|` over `samples` points on the circle of `radius` around root `k`.
pub fn pole_variation(set: &BetheRootSet, k: usize, radius: f64, samples: usize) -> Result<f64, BetheError> {
    let center = *set.roots.get(k).ok_or_else(|| BetheError::Invalid(format!("no root {k}")))?;
    let vals = (0..samples)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / samples as f64;
            lambda_eval(set, center + Complex64::from_polar(radius, th))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut worst: f64 = 0.0;
    for a in &vals {
        for b in &vals {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

/// `|(1/2πi) ∮ Λ dλ|` on the circle of `radius` around root `k` (trapezoidal rule, exact to
/// round-off for a function analytic in the disc).
pub fn pole_residue(set: &BetheRootSet, k: usize, radius: f64, samples: usize) -> Result<f64, BetheError> {
    let center = *set.roots.get(k).ok_or_else(|| BetheError::Invalid(format!("no root {k}")))?;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..samples {
        let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / samples as f64);
        acc += lambda_eval(set, center + e * radius)? * e;
    }
    Ok((acc * radius / samples as f64).norm())
}

/// Copy of the set with root `k` moved by `delta`.
pub fn perturbed(set: &BetheRootSet, k: usize, delta: Complex64) -> BetheRootSet {
    let mut moved = set.clone();
    moved.roots[k] += delta;
    moved.residual = bae_residual(set.n, set.q, set.boundary, &moved.roots);
    moved
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMatch {
    pub u: Complex64,
    pub formula: Complex64,
    pub target: Complex64,
    pub eigenvalue: Complex64,
    pub relative_mismatch: f64,
    /// Distance to the second-nearest eigenvalue over the nearest one.
    pub separation_ratio: f64,
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub m: usize,
    pub boundary: Boundary,
    pub roots: Vec<Complex64>,
    /// Uniform shift applied to the roots before evaluating the formula (zero unless requested).
    pub root_shift: Complex64,
    pub kappa: Complex64,
    /// Numeric vacuum eigenvalue used for the fit.
    pub vacuum_eigenvalue: Complex64,
    pub points: Vec<PointMatch>,
    pub max_mismatch: f64,
    pub tolerance: f64,
}

impl SpectrumReport {
    pub fn passed(&self) -> bool {
        self.max_mismatch < self.tolerance && self.points.iter().all(|p| p.unique)
    }
}

fn point_transfer(model: &LaxModel, u: Complex64) -> Result<SparseOperator, BetheError> {
    let one = Complex64::new(1.0, 0.0);
    Ok(model.transfer(Spectral::Point { u, w: one })?.coefficient(0, 0))
}

/// Eigenvalues of the transfer matrix restricted to the `M`-particle sector at `u`.
pub fn sector_eigenvalues(spec: &ChainSpec, m: usize, u: Complex64) -> Result<Vec<Complex64>, BetheError> {
    if m > spec.d - 1 {
        return Err(BetheError::SectorTooLarge(format!("M = {m} exceeds D - 1 = {}", spec.d - 1)));
    }
    let basis = sector_basis(spec, m);
    if basis.len() > MAX_SECTOR_DIM {
        return Err(BetheError::SectorTooLarge(format!("dimension {}", basis.len())));
    }
    let model = LaxModel::new(spec)?;
    let t = point_transfer(&model, u)?;
    let block = t.dense_block(&basis.indices, &basis.indices);
    Ok(block.eigenvalues::<c64>().into_iter().map(from_c64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    pub tolerance: f64,
    pub root_shift: Complex64,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, root_shift: Complex64::new(0.0, 0.0) }
    }
}

/// Compare the spectrum formula with the sector eigenvalues at each `u = e^λ`.
pub fn match_spectrum(spec: &ChainSpec, set: &BetheRootSet, points: &[Complex64]) -> Result<SpectrumReport, BetheError> {
    match_spectrum_with(spec, set, points, MatchOptions::default())
}

pub fn match_spectrum_with(
    spec: &ChainSpec,
    set: &BetheRootSet,
    points: &[Complex64],
    opts: MatchOptions,
) -> Result<SpectrumReport, BetheError> {
    if set.n != spec.n || set.boundary != spec.boundary {
        return Err(BetheError::Invalid("root set does not belong to this chain".into()));
    }
    let first = *points.first().ok_or_else(|| BetheError::Invalid("no evaluation points".into()))?;
    if set.m > spec.d - 1 {
        return Err(BetheError::SectorTooLarge(format!("M = {} exceeds D - 1 = {}", set.m, spec.d - 1)));
    }
    let basis = sector_basis(spec, set.m);
    if basis.len() > MAX_SECTOR_DIM {
        return Err(BetheError::SectorTooLarge(format!("dimension {}", basis.len())));
    }
    let model = LaxModel::new(spec)?;
    let vac = BetheRootSet::vacuum(set.n, set.q, set.boundary);

    // kappa from t|Ω> at the first point
    let t0 = point_transfer(&model, first)?;
    let vacuum_eigenvalue = t0.get(0, 0);
    let kappa = vacuum_eigenvalue / lambda_eval(&vac, first.ln())?;

    let shifted = if opts.root_shift == Complex64::new(0.0, 0.0) { set.clone() } else { set.shifted(opts.root_shift) };
    let mut out = Vec::with_capacity(points.len());
    for &u in points {
        let t = point_transfer(&model, u)?;
        let evs: Vec<Complex64> = t
            .dense_block(&basis.indices, &basis.indices)
            .eigenvalues::<c64>()
            .into_iter()
            .map(from_c64)
            .collect();
        let formula = lambda_eval(&shifted, u.ln())?;
        let target = kappa * formula;
        let mut d: Vec<(f64, Complex64)> = evs.iter().map(|&e| ((e - target).norm(), e)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (near, eigenvalue) = d[0];
        let separation_ratio = d.get(1).map_or(f64::INFINITY, |s| s.0 / near.max(f64::MIN_POSITIVE));
        out.push(PointMatch {
            u,
            formula,
            target,
            eigenvalue,
            relative_mismatch: near / target.norm().max(f64::MIN_POSITIVE),
            separation_ratio,
            unique: separation_ratio >= 10.0,
        });
    }
    let max_mismatch = out.iter().map(|p| p.relative_mismatch).fold(0.0, f64::max);
    Ok(SpectrumReport {
        m: set.m,
        boundary: set.boundary,
        roots: set.roots.clone(),
        root_shift: opts.root_shift,
        kappa,
        vacuum_eigenvalue,
        points: out,
        max_mismatch,
        tolerance: opts.tolerance,
    })
}

/// Like [`match_spectrum`] but turns a mismatch above tolerance into an error carrying the report.
pub fn match_spectrum_strict(spec: &ChainSpec, set: &BetheRootSet, points: &[Complex64]) -> Result<SpectrumReport, BetheError> {
    let r = match_spectrum(spec, set, points)?;
    if r.passed() {
        Ok(r)
    } else {
        Err(BetheError::NoEigenvalueWithin { mismatch: r.max_mismatch, report: Box::new(r) })
    }
}

/// Eigendecomposition of `H_phys` on one occupation sector.
pub struct SectorBlock {
    pub m: usize,
    pub indices: Vec<usize>,
    pub energies: Vec<Complex64>,
    v: Mat<c64>,
    v_inv: Mat<c64>,
}

impl SectorBlock {
    fn new(h: &SparseOperator, m: usize, indices: Vec<usize>) -> Self {
        let evd = h.dense_block(&indices, &indices).eigendecomposition::<c64>();
        let v = evd.u().to_owned();
        let energies = evd.s().column_vector().iter().map(|&z| from_c64(z)).collect();
        let v_inv = v.partial_piv_lu().inverse();
        Self { m, indices, energies, v, v_inv }
    }
}

/// Dense spectral data of `H_phys` on sectors `0..=M_max`, block by block (H conserves
/// total occupation, so cross-sector terms stay exactly zero).
pub struct SectorDynamics {
    pub blocks: Vec<SectorBlock>,
}

impl SectorDynamics {
    pub fn new(spec: &ChainSpec, m_max: usize) -> Result<Self, BetheError> {
        let total = sectors_up_to(spec, m_max).len();
        if total > MAX_SECTOR_DIM {
            return Err(BetheError::SectorTooLarge(format!("dimension {total}")));
        }
        let h = LaxModel::new(spec)?.extract_hamiltonians()?.h_phys;
        Ok(Self::from_operator(spec, &h, m_max))
    }

    pub fn from_operator(spec: &ChainSpec, h: &SparseOperator, m_max: usize) -> Self {
        let blocks = (0..=m_max)
            .map(|m| (m, sector_basis(spec, m).indices))
            .filter(|(_, idx)| !idx.is_empty())
            .map(|(m, idx)| SectorBlock::new(h, m, idx))
            .collect();
        Self { blocks }
    }

    pub fn energies(&self) -> Vec<Complex64> {
        self.blocks.iter().flat_map(|b| b.energies.iter().copied()).collect()
    }

    /// `Σ_{nm} e^{-i(E_n - E_m)t} <Q_f|n><n|O|m><m|Q_i>`, bra being the conjugate of `left`.
    pub fn expectation(&self, op: &SparseOperator, t: f64, left: &[Complex64], right: &[Complex64]) -> Complex64 {
        // per block: (bra V) e^{-itE} and e^{itE} (V^-1 ket)
        let sides: Vec<(Mat<c64>, Mat<c64>)> = self
            .blocks
            .iter()
            .map(|b| {
                let k = b.indices.len();
                let bra = Mat::from_fn(1, k, |_, j| to_c64(left[b.indices[j]].conj()));
                let ket = Mat::from_fn(k, 1, |i, _| to_c64(right[b.indices[i]]));
                let mut l = &bra * &b.v;
                let mut r = &b.v_inv * &ket;
                for (j, &e) in b.energies.iter().enumerate() {
                    l.write(0, j, l.read(0, j) * to_c64((ci(-t) * e).exp()));
                    r.write(j, 0, r.read(j, 0) * to_c64((ci(t) * e).exp()));
                }
                (l, r)
            })
            .collect();
        let mut acc = c64::new(0.0, 0.0);
        for (a, ba) in self.blocks.iter().enumerate() {
            for (c, bc) in self.blocks.iter().enumerate() {
                let o = op.dense_block(&ba.indices, &bc.indices);
                if o.norm_max() == 0.0 {
                    continue;
                }
                let mid = &(&ba.v_inv * &o) * &bc.v;
                acc += (&(&sides[a].0 * &mid) * &sides[c].1).read(0, 0);
            }
        }
        from_c64(acc)
    }
}

fn check_support(spec: &ChainSpec, m_max: usize, state: &[Complex64], name: &str) -> Result<(), BetheError> {
    if state.len() != spec.dim() {
        return Err(BetheError::Invalid(format!("{name} has length {} (expected {})", state.len(), spec.dim())));
    }
    for (i, z) in state.iter().enumerate() {
        if z.norm() > 0.0 && spec.occupations(i).iter().sum::<usize>() > m_max {
            return Err(BetheError::Invalid(format!("{name} has weight outside sectors <= {m_max}")));
        }
    }
    Ok(())
}

/// `ℰ(t) = <Q_f| e^{-itH} O e^{itH} |Q_i>` with `H = H_phys`, by dense diagonalization on
/// sectors `0..=M_max` (H conserves total occupation).
pub fn evolve_expectation(
    spec: &ChainSpec,
    op: &SparseOperator,
    t: f64,
    left: &[Complex64],
    right: &[Complex64],
    m_max: usize,
) -> Result<Complex64, BetheError> {
    check_support(spec, m_max, left, "left state")?;
    check_support(spec, m_max, right, "right state")?;
    Ok(SectorDynamics::new(spec, m_max)?.expectation(op, t, left, right))
}

#[cfg(test)]
mod tests;
