//! Closed-form expressions for Hamiltonians, `B` and `𝔸` operators and equations of motion,
//! written as polynomials in the `b`-space parameter `w`.
//!
//! `printed_*` builders reproduce the reference expressions verbatim; `working_*` builders are
//! the corrected forms that actually satisfy the corresponding identities.

use super::{LaurentOperator, OperatorLaurentMatrix};
use crate::fockspace::{ChainOps, SparseOperator};
use num_complex::Complex64;

/// Named closed forms on one chain.
pub struct ClosedForms<'a> {
    ops: &'a ChainOps,
    q: Complex64,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl<'a> ClosedForms<'a> {
    pub fn new(ops: &'a ChainOps) -> Self {
        Self { ops, q: ops.spec.q }
    }

    fn n(&self) -> usize {
        self.ops.spec.n
    }

    fn w(&self, op: SparseOperator, p: i32) -> LaurentOperator {
        LaurentOperator::monomial(op, 0, p)
    }

    fn id(&self, s: Complex64) -> SparseOperator {
        self.ops.scalar(s)
    }

    fn m2(&self, e: [LaurentOperator; 4]) -> OperatorLaurentMatrix {
        OperatorLaurentMatrix::from_entries(2, 2, e.to_vec())
    }

    fn prev(&self, n: usize) -> usize {
        self.ops.wrap(n as i64 - 1)
    }

    fn next(&self, n: usize) -> usize {
        self.ops.wrap(n as i64 + 1)
    }

    fn bd_b(&self, i: usize, j: usize) -> SparseOperator {
        self.ops.b_dag(i) * self.ops.b(j)
    }

    fn b_bd(&self, i: usize, j: usize) -> SparseOperator {
        self.ops.b(i) * self.ops.b_dag(j)
    }

    fn sum(&self, terms: impl Iterator<Item = SparseOperator>) -> SparseOperator {
        terms.fold(self.ops.zero(), |a, t| &a + &t)
    }

    /// `v_N ⋯ v_1`.
    pub fn v_product(&self) -> SparseOperator {
        (1..=self.n()).fold(self.ops.identity.clone(), |a, k| &a * self.ops.v(k))
    }

    /// `v_N^2 ⋯ v_1^2`.
    pub fn v2_product(&self) -> SparseOperator {
        let v = self.v_product();
        &v * &v
    }

    // ---- periodic chain ----

    /// `Σ_j b+_{j+1} b_j` (cyclic).
    pub fn h_plus(&self) -> SparseOperator {
        self.sum((1..=self.n()).map(|j| self.bd_b(self.next(j), j)))
    }

    /// `Σ_j b_{j+1} b+_j` (cyclic).
    pub fn h_minus(&self) -> SparseOperator {
        self.sum((1..=self.n()).map(|j| self.b_bd(self.next(j), j)))
    }

    pub fn h_phys(&self) -> SparseOperator {
        &self.h_plus().scale(self.q) + &self.h_minus().scale(1.0 / self.q)
    }

    fn sum_excl_plus(&self, n: usize) -> SparseOperator {
        let nm = self.prev(n);
        self.sum((1..=self.n()).filter(|&j| j != nm).map(|j| self.bd_b(self.next(j), j)))
    }

    fn sum_excl_minus(&self, n: usize) -> SparseOperator {
        let nm = self.prev(n);
        self.sum((1..=self.n()).filter(|&j| j != nm).map(|j| self.b_bd(self.next(j), j)))
    }

    pub fn printed_a_plus(&self, n: usize) -> OperatorLaurentMatrix {
        let q = self.q;
        let nm = self.prev(n);
        let zeta = q.powi(-2) - 1.0;
        let (ca, cb, cc, cd) = (1.0 - 1.0 / q, zeta, 1.0 / q - q, 1.0 - q);
        let x = self.bd_b(n, nm);
        self.m2([
            self.w(self.id(zeta), 2).add(&self.w(x.scale(ca), 0)),
            self.w(self.ops.b_dag(n).scale(cb), 1),
            self.w(self.ops.b(nm).scale(cc), 1),
            self.w(x.scale(cd), 0),
        ])
    }

    pub fn printed_a_minus(&self, n: usize) -> OperatorLaurentMatrix {
        let q = self.q;
        let nm = self.prev(n);
        let zt = q * q - 1.0;
        let (cat, cbt, cct, cd) = (1.0 - q, 1.0 / q - q, zt, 1.0 - q);
        self.m2([
            self.w(self.bd_b(nm, n).scale(cat), 0),
            self.w(self.ops.b_dag(nm).scale(cbt), -1),
            self.w(self.ops.b(n).scale(cct), -1),
            self.w(self.id(zt), -2).add(&self.w(self.bd_b(n, nm).scale(cd), 0)),
        ])
    }

    /// The `u -> 0` generator expanded from `𝔹`, i.e. the one that satisfies zero curvature
    /// with `H^-`.
    pub fn working_a_minus(&self, n: usize) -> OperatorLaurentMatrix {
        let q = self.q;
        let nm = self.prev(n);
        let x = self.b_bd(n, nm);
        self.m2([
            self.w(x.scale(1.0 - 1.0 / q), 0).add(&self.w(self.id(c(1.0)), -2)),
            self.w(self.ops.b_dag(nm).scale(1.0 / q - q), -1),
            self.w(self.ops.b(n).scale(1.0 - q * q), -1),
            self.w(self.id(q * q), -2).add(&self.w(x.scale(1.0 - q), 0)),
        ])
    }

    pub fn printed_b_plus0(&self) -> OperatorLaurentMatrix {
        let v = self.v_product();
        self.m2([
            self.w(v.scale(self.q), -1),
            self.w(self.ops.zero(), 0),
            self.w(self.ops.zero(), 0),
            self.w(v, -1),
        ])
    }

    pub fn printed_b_plus2(&self, n: usize) -> OperatorLaurentMatrix {
        let q = self.q;
        let v = self.v_product();
        let nm = self.prev(n);
        let s = self.sum_excl_plus(n);
        let x = self.bd_b(n, nm);
        let g = q - 1.0 / q;
        self.m2([
            self.w(&v * &(&s.scale(q) + &x), -1).add(&self.w(v.scale(-1.0 / q), 1)),
            self.w(&v * &self.ops.b_dag(n).scale(g), 0),
            self.w(&v * &self.ops.b(nm).scale(g), 0),
            self.w(&v * &(&s + &x.scale(q)), -1).add(&self.w(v.scale(c(-1.0)), 1)),
        ])
    }

    pub fn printed_b_plus(&self, n: usize) -> OperatorLaurentMatrix {
        let q = self.q;
        let nm = self.prev(n);
        let s = self.sum_excl_plus(n);
        let x = self.bd_b(n, nm);
        self.m2([
            self.w(&s + &x.scale(1.0 / q), 0).add(&self.w(self.id(-q.powi(-2)), 2)),
            self.w(self.ops.b_dag(n).scale(1.0 - q.powi(-2)), 1),
            self.w(self.ops.b(nm).scale(q - 1.0 / q), 1),
            self.w(&s + &x.scale(q), 0).add(&self.w(self.id(c(-1.0)), 2)),
        ])
    }

    pub fn printed_b_minus0(&self) -> OperatorLaurentMatrix {
        let v = self.v_product();
        self.m2([
            self.w(v.clone(), 1),
            self.w(self.ops.zero(), 0),
            self.w(self.ops.zero(), 0),
            self.w(v.scale(1.0 / self.q), 1),
        ])
    }

    pub fn printed_b_minus2(&self, n: usize) -> OperatorLaurentMatrix {
        let q = self.q;
        let v = self.v_product();
        let nm = self.prev(n);
        let s = self.sum_excl_minus(n);
        let x = self.b_bd(n, nm);
        let g = q - 1.0 / q;
        self.m2([
            self.w(&v * &(&s + &x.scale(1.0 / q)), 1).add(&self.w(v.scale(c(-1.0)), -1)),
            self.w(&v * &self.ops.b_dag(nm).scale(g), 0),
            self.w(&v * &self.ops.b(n).scale(g), 0),
            self.w(&v * &(&s.scale(1.0 / q) + &x), 1).add(&self.w(v.scale(-q), -1)),
        ])
    }

    pub fn printed_b_minus(&self, n: usize) -> OperatorLaurentMatrix {
        let q = self.q;
        let nm = self.prev(n);
        let s = self.sum_excl_minus(n);
        let x = self.b_bd(n, nm);
        self.m2([
            self.w(&s + &x.scale(1.0 / q), 0).add(&self.w(self.id(c(-1.0)), -2)),
            self.w(self.ops.b_dag(nm).scale(q - 1.0 / q), -1),
            self.w(self.ops.b(n).scale(q * q - 1.0), -1),
            self.w(&s + &x.scale(q), 0).add(&self.w(self.id(-q * q), -2)),
        ])
    }

    /// Printed `(v̇_n, ḃ_n, ḃ+_n)` for `H = qH^+ + q^-1 H^-`.
    pub fn printed_eom(&self, n: usize) -> [SparseOperator; 3] {
        let q = self.q;
        let o = self.ops;
        let (np, nm) = (self.next(n), self.prev(n));
        let fwd_b = &o.b(np).scale(1.0 / q) + &o.b(nm).scale(q);
        let fwd_bd = &o.b_dag(np).scale(q) + &o.b_dag(nm).scale(1.0 / q);
        let vinv2 = o.v_inv(n) * o.v_inv(n);
        let vdot = &(&(o.v(n) * o.b_dag(n)) * &fwd_b).scale(1.0 - q)
            - &(&(o.v(n) * o.b(n)) * &fwd_bd).scale(1.0 - q);
        let bdot = (&vinv2 * &fwd_b).scale(1.0 / q - q);
        let bddot = (&vinv2 * &fwd_bd).scale(q - 1.0 / q);
        [vdot, bdot, bddot]
    }

    /// `v̇_n` as it follows from `[H, v_n]`.
    pub fn working_vdot(&self, n: usize) -> SparseOperator {
        let q = self.q;
        let o = self.ops;
        let (np, nm) = (self.next(n), self.prev(n));
        let fwd_b = &o.b(np).scale(1.0 / q) + &o.b(nm).scale(q);
        let fwd_bd = &o.b_dag(np).scale(q) + &o.b_dag(nm).scale(1.0 / q);
        &(&(o.v(n) * o.b_dag(n)) * &fwd_b).scale(q - 1.0) + &(&(o.b(n) * o.v(n)) * &fwd_bd).scale(1.0 - q)
    }

    // ---- open chain ----

    fn open_bulk_plus(&self) -> SparseOperator {
        let q = self.q;
        self.sum((1..self.n()).map(|j| &self.bd_b(j + 1, j) + &self.b_bd(j + 1, j).scale(q.powi(-2))))
    }

    pub fn open_h_plus(&self) -> SparseOperator {
        let q = self.q;
        let nn = self.n();
        &(&self.open_bulk_plus() + &self.bd_b(1, 1)) + &self.b_bd(nn, nn).scale(q.powi(-2))
    }

    pub fn open_h_minus(&self) -> SparseOperator {
        let q = self.q;
        let nn = self.n();
        let bulk = self.sum((1..nn).map(|j| &self.b_bd(j + 1, j) + &self.bd_b(j + 1, j).scale(q * q)));
        &(&bulk + &self.b_bd(1, 1)) + &self.bd_b(nn, nn).scale(q * q)
    }

    pub fn open_h_plus0(&self) -> SparseOperator {
        self.v2_product().scale(self.q.powi(self.n() as i32))
    }

    pub fn open_h_minus0(&self) -> SparseOperator {
        self.v2_product().scale(self.q.powi(-(self.n() as i32)))
    }

    pub fn open_h_plus2(&self) -> SparseOperator {
        &self.open_h_plus0() * &self.open_h_plus()
    }

    pub fn open_h_minus2(&self) -> SparseOperator {
        &self.open_h_minus0() * &self.open_h_minus()
    }

    /// `Σ (q b+_{n+1} b_n + q^-1 b_{n+1} b+_n) + q b+_1 b_1 + q^-1 b_N b+_N`.
    pub fn open_h_phys(&self) -> SparseOperator {
        let q = self.q;
        let nn = self.n();
        let bulk = self.sum((1..nn).map(|j| &self.bd_b(j + 1, j).scale(q) + &self.b_bd(j + 1, j).scale(1.0 / q)));
        &(&bulk + &self.bd_b(1, 1).scale(q)) + &self.b_bd(nn, nn).scale(1.0 / q)
    }

    pub fn printed_open_b_plus0(&self) -> OperatorLaurentMatrix {
        let h0 = self.open_h_plus0();
        let q = self.q;
        self.m2([
            self.w(h0.scale(q * q), 0),
            self.w(self.ops.zero(), 0),
            self.w(self.ops.zero(), 0),
            self.w(h0, 0),
        ])
    }

    fn w_sym(&self, op: &SparseOperator, p: i32) -> LaurentOperator {
        self.w(op.clone(), p).add(&self.w(op.clone(), -p))
    }

    pub fn printed_open_b_plus2(&self) -> OperatorLaurentMatrix {
        let q = self.q;
        let nn = self.n();
        let h0 = self.open_h_plus0();
        let bulk = &h0 * &self.open_bulk_plus();
        let e11 = &self.bd_b(1, 1) + &self.b_bd(nn, nn);
        let e22 = &(&self.bd_b(1, 1).scale(q * q) + &self.b_bd(nn, nn).scale(q.powi(-2)))
            + &self.id((q - 1.0 / q).powi(2));
        self.m2([
            self.w(&(&h0 * &e11) + &bulk.scale(q * q), 0).add(&self.w_sym(&h0.scale(c(-1.0)), 2)),
            self.w_sym(&(&h0 * self.ops.b_dag(1)).scale(q * q - 1.0), 1),
            self.w_sym(&(&h0 * self.ops.b(1)).scale(1.0 - q.powi(-2)), 1),
            self.w(&(&h0 * &e22) + &bulk, 0).add(&self.w_sym(&h0.scale(c(-1.0)), 2)),
        ])
    }

    pub fn printed_open_b_plus(&self) -> OperatorLaurentMatrix {
        let q = self.q;
        let nn = self.n();
        let tail = &self.open_bulk_plus() + &self.b_bd(nn, nn).scale(q.powi(-2));
        let g = 1.0 - q.powi(-2);
        self.m2([
            self.w(&self.bd_b(1, 1).scale(q.powi(-2)) + &tail, 0).add(&self.w_sym(&self.id(-q.powi(-2)), 2)),
            self.w_sym(&self.ops.b_dag(1).scale(g), 1),
            self.w_sym(&self.ops.b(1).scale(g), 1),
            self.w(&(&self.bd_b(1, 1).scale(q * q) + &self.id((q - 1.0 / q).powi(2))) + &tail, 0)
                .add(&self.w_sym(&self.id(c(-1.0)), 2)),
        ])
    }

    pub fn printed_open_a1(&self) -> OperatorLaurentMatrix {
        let q = self.q;
        let g = 1.0 / q - q;
        self.m2([
            self.w_sym(&self.id(1.0 / q), 2).add(&self.w(self.bd_b(1, 1).scale(-g), 0)),
            self.w_sym(&self.ops.b_dag(1).scale(g), 1),
            self.w_sym(&self.ops.b(1).scale(g), 1),
            self.w_sym(&self.id(q), 2).add(&self.w(self.b_bd(1, 1).scale(g), 0)),
        ])
    }

    /// Printed boundary `(v̇_1, ḃ_1, ḃ+_1)` for the open chain.
    pub fn printed_open_eom(&self) -> [SparseOperator; 3] {
        let q = self.q;
        let o = self.ops;
        let vinv2 = o.v_inv(1) * o.v_inv(1);
        let vdot = &(&(o.v(1) * o.b_dag(2)) * o.b(1)).scale(1.0 - q)
            + &(&(o.v(1) * o.b(2)) * o.b_dag(1)).scale(1.0 - 1.0 / q);
        let bdot = (&(o.b(1) + o.b(2)) * &vinv2).scale(q.powi(-2) - 1.0);
        let bddot = (&(o.b_dag(1) + o.b_dag(2)) * &vinv2).scale(q * q - 1.0);
        [vdot, bdot, bddot]
    }
}
