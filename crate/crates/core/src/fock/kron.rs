//! Operators stored as sums of tensor products of sparse single-factor
//! matrices. They act on joint vectors without ever forming the dense matrix.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use faer::Mat;

use crate::error::{Error, Result};
use crate::fock::layout::HilbertLayout;
use crate::fock::operator::{LinearOperator, OperatorMatrix};
use crate::linalg::{self, C64};

/// Sparse matrix on one tensor factor, stored as `(row, col, value)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOp {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl LocalOp {
    pub fn from_entries(dim: usize, entries: Vec<(usize, usize, C64)>) -> Self {
        let mut merged: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in entries {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside factor of size {dim}");
            *merged.entry((r, c)).or_insert(linalg::ZERO) += v;
        }
        let entries = merged
            .into_iter()
            .filter(|(_, v)| *v != linalg::ZERO)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Self { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_entries(dim, (0..dim).map(|i| (i, i, linalg::ONE)).collect())
    }

    /// `a` on occupations `0..=cutoff`.
    pub fn annihilation(cutoff: usize) -> Self {
        Self::from_entries(
            cutoff + 1,
            (1..=cutoff)
                .map(|n| (n - 1, n, linalg::real((n as f64).sqrt())))
                .collect(),
        )
    }

    pub fn creation(cutoff: usize) -> Self {
        Self::annihilation(cutoff).adjoint()
    }

    pub fn number(cutoff: usize) -> Self {
        Self::from_entries(
            cutoff + 1,
            (0..=cutoff).map(|n| (n, n, linalg::real(n as f64))).collect(),
        )
    }

    pub fn from_dense(m: &Mat<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != linalg::ZERO {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_entries(m.nrows(), entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self::from_entries(
            self.dim,
            self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect(),
        )
    }

    /// `self * rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let mut out = Vec::new();
        for &(r, k, a) in &self.entries {
            for &(k2, c, b) in &rhs.entries {
                if k == k2 {
                    out.push((r, c, a * b));
                }
            }
        }
        Self::from_entries(self.dim, out)
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    pub fn one_norm(&self) -> f64 {
        let mut cols = vec![0.0; self.dim];
        for &(_, c, v) in &self.entries {
            cols[c] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }
}

/// `coeff * (op_f1 ⊗ op_f2 ⊗ ...)`; factors not listed are the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct KronTerm {
    pub coeff: C64,
    factors: Vec<(usize, LocalOp)>,
}

impl KronTerm {
    pub fn factors(&self) -> &[(usize, LocalOp)] {
        &self.factors
    }

    fn compose(&self, rhs: &Self) -> Self {
        let mut factors: BTreeMap<usize, LocalOp> = self.factors.iter().cloned().collect();
        for (f, op) in &rhs.factors {
            let combined = match factors.remove(f) {
                Some(left) => left.compose(op),
                None => op.clone(),
            };
            factors.insert(*f, combined);
        }
        Self {
            coeff: self.coeff * rhs.coeff,
            factors: factors.into_iter().collect(),
        }
    }

    fn adjoint(&self) -> Self {
        Self {
            coeff: self.coeff.conj(),
            factors: self.factors.iter().map(|(f, op)| (*f, op.adjoint())).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct KronOperator {
    layout: HilbertLayout,
    terms: Vec<KronTerm>,
}

impl KronOperator {
    pub fn zero(layout: HilbertLayout) -> Self {
        Self {
            layout,
            terms: Vec::new(),
        }
    }

    pub fn identity(layout: HilbertLayout) -> Self {
        Self {
            layout,
            terms: vec![KronTerm {
                coeff: linalg::ONE,
                factors: Vec::new(),
            }],
        }
    }

    /// `op` on tensor factor `factor` (spins first, then modes).
    pub fn local(layout: HilbertLayout, factor: usize, op: LocalOp) -> Result<Self> {
        let dims = layout.factor_dims();
        if factor >= dims.len() {
            return Err(Error::InvalidArgument(format!(
                "factor {factor} outside {} factors",
                dims.len()
            )));
        }
        if dims[factor] != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: dims[factor],
                found: op.dim(),
            });
        }
        Ok(Self {
            layout,
            terms: vec![KronTerm {
                coeff: linalg::ONE,
                factors: vec![(factor, op)],
            }],
        })
    }

    pub fn annihilation(layout: &HilbertLayout, mode: usize) -> Result<Self> {
        let f = layout.mode_factor(mode)?;
        Self::local(layout.clone(), f, LocalOp::annihilation(layout.cutoff(mode)))
    }

    pub fn creation(layout: &HilbertLayout, mode: usize) -> Result<Self> {
        Ok(Self::annihilation(layout, mode)?.adjoint())
    }

    pub fn number(layout: &HilbertLayout, mode: usize) -> Result<Self> {
        let f = layout.mode_factor(mode)?;
        Self::local(layout.clone(), f, LocalOp::number(layout.cutoff(mode)))
    }

    /// Single-spin operator given as a 2x2 matrix in the (down, up) basis.
    pub fn spin(layout: &HilbertLayout, spin: usize, m: &Mat<C64>) -> Result<Self> {
        let f = layout.spin_factor(spin)?;
        Self::local(layout.clone(), f, LocalOp::from_dense(m))
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn terms(&self) -> &[KronTerm] {
        &self.terms
    }

    pub fn scaled(&self, z: C64) -> Self {
        Self {
            layout: self.layout.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| KronTerm {
                    coeff: t.coeff * z,
                    factors: t.factors.clone(),
                })
                .collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            terms: self.terms.iter().map(KronTerm::adjoint).collect(),
        }
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        self.assert_same_layout(rhs);
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                terms.push(a.compose(b));
            }
        }
        Self {
            layout: self.layout.clone(),
            terms,
        }
    }

    pub fn to_operator(&self) -> Result<OperatorMatrix> {
        let d = crate::fock::operator::check_dense(&self.layout)?;
        let dense = self.apply_matrix(Mat::<C64>::identity(d, d).as_ref());
        OperatorMatrix::from_matrix(self.layout.clone(), dense)
    }

    fn assert_same_layout(&self, other: &Self) {
        assert_eq!(
            self.layout, other.layout,
            "operator layouts differ; both operands must share one HilbertLayout"
        );
    }

    fn apply_term(&self, term: &KronTerm, v: &[C64], out: &mut [C64], dims: &[usize]) {
        if term.factors.is_empty() {
            for (o, x) in out.iter_mut().zip(v) {
                *o += term.coeff * x;
            }
            return;
        }
        let n = v.len();
        let mut cur = v.to_vec();
        let mut next = vec![linalg::ZERO; n];
        for (f, op) in &term.factors {
            let d = dims[*f];
            let inner: usize = dims[f + 1..].iter().product();
            let outer = n / (d * inner);
            next.iter_mut().for_each(|z| *z = linalg::ZERO);
            for &(r, c, val) in op.entries() {
                for o in 0..outer {
                    let src = o * d * inner + c * inner;
                    let dst = o * d * inner + r * inner;
                    let (s, t) = (&cur[src..src + inner], &mut next[dst..dst + inner]);
                    for (y, x) in t.iter_mut().zip(s) {
                        *y += val * x;
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        for (o, x) in out.iter_mut().zip(&cur) {
            *o += term.coeff * x;
        }
    }
}

impl LinearOperator for KronOperator {
    fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.layout.dim(), "vector length does not match layout");
        let dims = self.layout.factor_dims();
        let mut out = vec![linalg::ZERO; v.len()];
        for term in &self.terms {
            self.apply_term(term, v, &mut out, &dims);
        }
        out
    }

    fn one_norm_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff.norm() * t.factors.iter().map(|(_, op)| op.one_norm()).product::<f64>())
            .sum()
    }

    /// Compares `<u, A v>` with `<A u, v>` on fixed pseudo-random probes.
    fn is_hermitian(&self) -> bool {
        let d = self.layout.dim();
        let probe = |seed: u64| -> Vec<C64> {
            let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
            (0..d)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    let a = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    let b = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                    linalg::c(a, b)
                })
                .collect()
        };
        let u = probe(1);
        let v = probe(2);
        let lhs = linalg::inner(&u, &self.apply(&v));
        let rhs = linalg::inner(&self.apply(&u), &v);
        let scale = self.one_norm_bound().max(1.0) * linalg::norm(&u) * linalg::norm(&v);
        (lhs - rhs).norm() <= 1e-12 * scale
    }
}

impl Add for &KronOperator {
    type Output = KronOperator;
    fn add(self, rhs: Self) -> KronOperator {
        self.assert_same_layout(rhs);
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        KronOperator {
            layout: self.layout.clone(),
            terms,
        }
    }
}

impl Sub for &KronOperator {
    type Output = KronOperator;
    fn sub(self, rhs: Self) -> KronOperator {
        self + &(-rhs)
    }
}

impl Neg for &KronOperator {
    type Output = KronOperator;
    fn neg(self) -> KronOperator {
        self.scaled(linalg::real(-1.0))
    }
}

impl Mul for &KronOperator {
    type Output = KronOperator;
    fn mul(self, rhs: Self) -> KronOperator {
        self.compose(rhs)
    }
}

impl Mul<C64> for &KronOperator {
    type Output = KronOperator;
    fn mul(self, rhs: C64) -> KronOperator {
        self.scaled(rhs)
    }
}

impl Mul<f64> for &KronOperator {
    type Output = KronOperator;
    fn mul(self, rhs: f64) -> KronOperator {
        self.scaled(linalg::real(rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_factorwise_agree() {
        let layout = HilbertLayout::with_cutoffs(vec![3, 2], 1).unwrap();
        let a0 = KronOperator::annihilation(&layout, 0).unwrap();
        let a1 = KronOperator::annihilation(&layout, 1).unwrap();
        let sx = Mat::from_fn(2, 2, |i, j| if i != j { linalg::ONE } else { linalg::ZERO });
        let s = KronOperator::spin(&layout, 0, &sx).unwrap();
        let op = &(&(&a0 * &a1.adjoint()) * &s) + &(&a1 * 0.5);
        let dense = op.to_operator().unwrap();
        let v: Vec<C64> = (0..layout.dim())
            .map(|i| linalg::c(i as f64 * 0.1, 1.0 - i as f64 * 0.03))
            .collect();
        let a = op.apply(&v);
        let b = dense.apply(&v);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn hermitian_detection() {
        let layout = HilbertLayout::new(2, 4, 0).unwrap();
        let a = KronOperator::annihilation(&layout, 0).unwrap();
        let x = &a + &a.adjoint();
        assert!(x.is_hermitian());
        assert!(!a.is_hermitian());
    }
}
