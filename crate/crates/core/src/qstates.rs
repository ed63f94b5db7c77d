//! q-numbers, the q-exponential and q-coherent states for the rescaled oscillator
//! `b b^+ - q^2 b^+ b = 1`, in the symmetric representation
//! `b|m> = sqrt([m]) |m-1>`, `b^+|m> = sqrt([m+1]) |m+1>`.

use crate::fockspace::SparseOperator;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QStateError {
    #[error("q^2 = 1: q-numbers degenerate")]
    DegenerateQ,
    #[error("|x| = {x} outside the series radius {radius}")]
    OutsideRadius { x: f64, radius: f64 },
    #[error("at least 10 terms required, got {0}")]
    TooFewTerms(usize),
    #[error("cutoff must be at least 2, got {0}")]
    BadCutoff(usize),
}

fn check_q(q: Complex64) -> Result<(), QStateError> {
    if (q * q - 1.0).norm() < 1e-14 {
        Err(QStateError::DegenerateQ)
    } else {
        Ok(())
    }
}

/// `[n] = (q^{2n} - 1) / (q^2 - 1)`.
pub fn q_number(n: usize, q: Complex64) -> Result<Complex64, QStateError> {
    check_q(q)?;
    let q2 = q * q;
    Ok((q2.powu(n as u32) - 1.0) / (q2 - 1.0))
}

/// `[n]! = [1][2]⋯[n]`, `[0]! = 1`.
pub fn q_factorial(n: usize, q: Complex64) -> Result<Complex64, QStateError> {
    (1..=n).try_fold(Complex64::new(1.0, 0.0), |acc, j| Ok(acc * q_number(j, q)?))
}

/// Radius of convergence of `Σ x^n/[n]!`: `1/|1-q^2|` inside the unit disc, infinite outside,
/// zero on the unit circle (the series is only formal there).
pub fn series_radius(q: Complex64) -> f64 {
    let r = q.norm();
    if (r - 1.0).abs() < 1e-12 {
        0.0
    } else if r < 1.0 {
        1.0 / (1.0 - q * q).norm()
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpQ {
    pub value: Complex64,
    pub terms: usize,
    /// Geometric bound on the neglected tail from the ratio of the next terms.
    pub remainder_bound: f64,
}

/// Partial sum `Σ_{n=0..terms} x^n/[n]!`.
pub fn exp_q(x: Complex64, q: Complex64, terms: usize) -> Result<ExpQ, QStateError> {
    check_q(q)?;
    if terms < 10 {
        return Err(QStateError::TooFewTerms(terms));
    }
    let radius = series_radius(q);
    if x.norm() >= radius {
        return Err(QStateError::OutsideRadius { x: x.norm(), radius });
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut value = term;
    for n in 1..=terms {
        term *= x / q_number(n, q)?;
        value += term;
    }
    // for |q| < 1 the ratios |x/[n]| decrease toward |x| |1-q^2|, so the next one bounds the rest
    let rho = (x / q_number(terms + 1, q)?).norm();
    let remainder_bound = if rho < 1.0 { term.norm() * rho / (1.0 - rho) } else { f64::INFINITY };
    Ok(ExpQ { value, terms, remainder_bound })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentVector {
    pub z: Complex64,
    pub q: Complex64,
    pub d: usize,
    /// `c_m = z^m / sqrt([m]!)`, `m = 0..D-1`.
    pub amplitudes: Vec<Complex64>,
    /// `τ = |c_{D-1}| |z| / sqrt(|[D]|)`, the first neglected amplitude.
    pub tail: f64,
}

/// Truncated `|z> = exp_q(z b^+)|0>`.
pub fn coherent_vector(z: Complex64, q: Complex64, d: usize) -> Result<CoherentVector, QStateError> {
    check_q(q)?;
    if d < 2 {
        return Err(QStateError::BadCutoff(d));
    }
    let radius = series_radius(q);
    if z.norm_sqr() >= radius {
        return Err(QStateError::OutsideRadius { x: z.norm_sqr(), radius });
    }
    let mut amplitudes = Vec::with_capacity(d);
    let mut c = Complex64::new(1.0, 0.0);
    amplitudes.push(c);
    for m in 1..d {
        c *= z / q_number(m, q)?.sqrt();
        amplitudes.push(c);
    }
    let tail = c.norm() * z.norm() / q_number(d, q)?.norm().sqrt();
    Ok(CoherentVector { z, q, d, amplitudes, tail })
}

/// Single-site `b` and `b^+` of the rescaled algebra at cutoff `D`.
pub fn rescaled_ladder(q: Complex64, d: usize) -> Result<(SparseOperator, SparseOperator), QStateError> {
    check_q(q)?;
    let mut lo = Vec::new();
    let mut up = Vec::new();
    for m in 1..d {
        let s = q_number(m, q)?.sqrt();
        lo.push((m - 1, m, s));
        up.push((m, m - 1, s));
    }
    Ok((SparseOperator::from_triplets(d, 1, &lo), SparseOperator::from_triplets(d, 1, &up)))
}

/// `<z|z'> = Σ conj(c_m) c'_m` over the common cutoff.
pub fn overlap(a: &CoherentVector, b: &CoherentVector) -> Complex64 {
    a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum()
}

/// `|b|z> - z|z>|` on components `m <= D-2`, where the truncated ladder is exact.
pub fn eigen_residual(v: &CoherentVector) -> Result<f64, QStateError> {
    let (b, _) = rescaled_ladder(v.q, v.d)?;
    let bz = b.apply(&v.amplitudes);
    Ok((0..v.d - 1).map(|m| (bz[m] - v.z * v.amplitudes[m]).norm_sqr()).sum::<f64>().sqrt())
}

/// Max `|(b b^+ - q^2 b^+ b - 1)_{ij}|` over rows and columns `<= D-2`.
pub fn algebra_residual(q: Complex64, d: usize) -> Result<f64, QStateError> {
    let (b, bd) = rescaled_ladder(q, d)?;
    let lhs = &(&b * &bd) - &(&bd * &b).scale(q * q);
    let mut worst: f64 = 0.0;
    for i in 0..d - 1 {
        for j in 0..d - 1 {
            let t = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((lhs.get(i, j) - t).norm());
        }
    }
    Ok(worst)
}

/// Overlap against `exp_q(conj(z) z')` with the combined truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapCheck {
    pub overlap: Complex64,
    pub exp_q: Complex64,
    pub difference: f64,
    pub bound: f64,
}

/// The neglected part `Σ_{m >= D} x^m/[m]!` starts at `|x|^D/|[D]!| = τ(z) τ(z')` and, for
/// `0 < q < 1`, shrinks by at most `ρ = |x|/[D+1]` per term.
pub fn overlap_check(a: &CoherentVector, b: &CoherentVector) -> Result<OverlapCheck, QStateError> {
    let x = a.z.conj() * b.z;
    let full = exp_q(x, a.q, 200)?;
    let d = a.d.min(b.d);
    let (ta, tb) = if a.d == d { (a.tail, tail_at(b, d)?) } else { (tail_at(a, d)?, b.tail) };
    let rho = (x / q_number(d + 1, a.q)?).norm();
    let tail = if rho < 1.0 { ta * tb / (1.0 - rho) } else { f64::INFINITY };
    let ov = overlap(a, b);
    Ok(OverlapCheck {
        overlap: ov,
        exp_q: full.value,
        difference: (ov - full.value).norm(),
        bound: tail + full.remainder_bound + 1e-15 * full.value.norm().max(1.0),
    })
}

/// `τ` of `v` as if it were cut at `d <= v.d`.
fn tail_at(v: &CoherentVector, d: usize) -> Result<f64, QStateError> {
    Ok(v.amplitudes[d - 1].norm() * v.z.norm() / q_number(d, v.q)?.norm().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn small_values() {
        assert_eq!(q_factorial(0, r(0.5)).unwrap(), r(1.0));
        let q = Complex64::new(0.3, 0.8);
        assert!((q_number(2, q).unwrap() - (1.0 + q * q)).norm() < 1e-15);
        assert!((q_factorial(3, r(0.5)).unwrap() - r(1.640625)).norm() < 1e-15);
        assert_eq!(q_number(1, q).unwrap(), r(1.0));
        assert_eq!(q_number(0, q).unwrap(), r(0.0));
        assert_eq!(q_number(3, r(1.0)), Err(QStateError::DegenerateQ));
        assert_eq!(q_number(3, r(-1.0)), Err(QStateError::DegenerateQ));
    }

    #[test]
    fn exp_q_basics() {
        assert_eq!(exp_q(r(0.0), r(0.6), 10).unwrap().value, r(1.0));
        let e = exp_q(r(0.5), r(0.999), 60).unwrap();
        assert!((e.value - r(0.5f64.exp())).norm() < 1e-2);
        assert!(matches!(exp_q(r(2.0), r(0.6), 20), Err(QStateError::OutsideRadius { .. })));
        assert!(matches!(exp_q(r(0.1), r(0.6), 9), Err(QStateError::TooFewTerms(9))));
    }

    #[test]
    fn remainder_bound_holds() {
        let q = r(0.6);
        let x = r(1.2);
        let full = exp_q(x, q, 300).unwrap().value;
        let e = exp_q(x, q, 12).unwrap();
        assert!((e.value - full).norm() <= e.remainder_bound);
    }

    #[test]
    fn coherent_state_properties() {
        let q = r(0.6);
        let v = coherent_vector(r(0.3), q, 25).unwrap();
        assert!(v.tail < 1e-8);
        assert!(eigen_residual(&v).unwrap() < v.tail);
        let vac = coherent_vector(r(0.0), q, 6).unwrap();
        assert_eq!(vac.amplitudes[0], r(1.0));
        assert!(vac.amplitudes[1..].iter().all(|c| c.norm() == 0.0));
        assert!(algebra_residual(q, 25).unwrap() < 1e-14);
    }

    #[test]
    fn overlap_matches_exp_q() {
        let q = r(0.6);
        let a = coherent_vector(r(0.3), q, 25).unwrap();
        let b = coherent_vector(r(0.2), q, 25).unwrap();
        let c = overlap_check(&a, &b).unwrap();
        assert!(c.difference <= c.bound, "{c:?}");
        // a short cutoff misses a visible tail, still inside the bound
        let a = coherent_vector(Complex64::new(0.9, 0.3), q, 4).unwrap();
        let b = coherent_vector(Complex64::new(0.7, -0.2), q, 4).unwrap();
        let c = overlap_check(&a, &b).unwrap();
        assert!(c.difference > 1e-4 && c.difference <= c.bound, "{c:?}");
    }

    #[test]
    fn tail_decreases_with_cutoff() {
        let q = r(0.6);
        let z = Complex64::new(0.8, 0.5);
        let taus: Vec<f64> = (2..30).map(|d| coherent_vector(z, q, d).unwrap().tail).collect();
        assert!(taus.windows(2).all(|w| w[1] < w[0]));
    }
}
