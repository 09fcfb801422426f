use faer::Mat;

use crate::error::Result;
use crate::fock::kron::KronOperator;
use crate::fock::layout::HilbertLayout;
use crate::fock::operator::OperatorMatrix;
use crate::linalg::{self, C64};

/// Pauli-type operators of one spin.
#[derive(Clone, Debug)]
pub struct SpinOperators<T> {
    pub plus: T,
    pub minus: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

/// 2x2 matrices in the (down, up) basis; `sigma_plus` maps down to up.
pub mod pauli {
    use super::*;

    fn m(entries: [[C64; 2]; 2]) -> Mat<C64> {
        Mat::from_fn(2, 2, |i, j| entries[i][j])
    }

    pub fn plus() -> Mat<C64> {
        m([[linalg::ZERO, linalg::ZERO], [linalg::ONE, linalg::ZERO]])
    }

    pub fn minus() -> Mat<C64> {
        m([[linalg::ZERO, linalg::ONE], [linalg::ZERO, linalg::ZERO]])
    }

    pub fn x() -> Mat<C64> {
        m([[linalg::ZERO, linalg::ONE], [linalg::ONE, linalg::ZERO]])
    }

    /// `-i (sigma_plus - sigma_minus)`.
    pub fn y() -> Mat<C64> {
        m([[linalg::ZERO, linalg::I], [-linalg::I, linalg::ZERO]])
    }

    pub fn z() -> Mat<C64> {
        m([[linalg::real(-1.0), linalg::ZERO], [linalg::ZERO, linalg::ONE]])
    }
}

pub fn annihilation_kron(layout: &HilbertLayout, mode: usize) -> Result<KronOperator> {
    KronOperator::annihilation(layout, mode)
}

/// `(X, P)` with `X = (a + a^dag)/sqrt 2`, `P = -i (a - a^dag)/sqrt 2`.
pub fn quadratures_kron(layout: &HilbertLayout, mode: usize) -> Result<(KronOperator, KronOperator)> {
    let a = KronOperator::annihilation(layout, mode)?;
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = &(&a + &ad) * s;
    let p = &(&a - &ad) * linalg::c(0.0, -s);
    Ok((x, p))
}

pub fn spin_ops_kron(layout: &HilbertLayout, spin: usize) -> Result<SpinOperators<KronOperator>> {
    Ok(SpinOperators {
        plus: KronOperator::spin(layout, spin, &pauli::plus())?,
        minus: KronOperator::spin(layout, spin, &pauli::minus())?,
        x: KronOperator::spin(layout, spin, &pauli::x())?,
        y: KronOperator::spin(layout, spin, &pauli::y())?,
        z: KronOperator::spin(layout, spin, &pauli::z())?,
    })
}

/// `a` on `mode`, identity on every other factor.
pub fn build_annihilation(layout: &HilbertLayout, mode: usize) -> Result<OperatorMatrix> {
    annihilation_kron(layout, mode)?.to_operator()
}

pub fn build_number(layout: &HilbertLayout, mode: usize) -> Result<OperatorMatrix> {
    KronOperator::number(layout, mode)?.to_operator()
}

pub fn build_quadratures(
    layout: &HilbertLayout,
    mode: usize,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let (x, p) = quadratures_kron(layout, mode)?;
    Ok((x.to_operator()?, p.to_operator()?))
}

pub fn build_spin_ops(layout: &HilbertLayout, spin: usize) -> Result<SpinOperators<OperatorMatrix>> {
    let k = spin_ops_kron(layout, spin)?;
    Ok(SpinOperators {
        plus: k.plus.to_operator()?,
        minus: k.minus.to_operator()?,
        x: k.x.to_operator()?,
        y: k.y.to_operator()?,
        z: k.z.to_operator()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::state::{variance, QuantumState, StateVector};
    use crate::linalg::kron;

    #[test]
    fn annihilation_lowers_one_to_zero() {
        let layout = HilbertLayout::new(1, 5, 0).unwrap();
        let a = build_annihilation(&layout, 0).unwrap();
        assert_eq!(a.get(0, 1), linalg::ONE);
        let n = &a.adjoint() * &a;
        for k in 0..=5 {
            assert!((n.get(k, k).re - k as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn canonical_commutators_below_the_edge() {
        let layout = HilbertLayout::new(1, 8, 0).unwrap();
        let a = build_annihilation(&layout, 0).unwrap();
        let comm = a.commutator(&a.adjoint());
        for m in 0..8 {
            assert!((comm.get(m, m) - linalg::ONE).norm() < 1e-13);
        }
        let (x, p) = build_quadratures(&layout, 0).unwrap();
        assert!(x.is_hermitian() && p.is_hermitian());
        let xp = x.commutator(&p);
        for m in 0..7 {
            assert!((xp.get(m, m) - linalg::I).norm() < 1e-13);
        }
    }

    #[test]
    fn embedding_matches_kron_with_identity() {
        let layout = HilbertLayout::new(2, 3, 1).unwrap();
        let a1 = build_annihilation(&layout, 0).unwrap();
        let single = build_annihilation(&HilbertLayout::new(1, 3, 0).unwrap(), 0).unwrap();
        let id2 = Mat::<C64>::identity(2, 2);
        let id4 = Mat::<C64>::identity(4, 4);
        let expected = kron(id2.as_ref(), kron(single.matrix(), id4.as_ref()).as_ref());
        assert!(linalg::max_abs_diff(a1.matrix(), expected.as_ref()) <= 1e-14);
    }

    #[test]
    fn spin_conventions() {
        let layout = HilbertLayout::new(1, 2, 1).unwrap();
        let s = build_spin_ops(&layout, 0).unwrap();
        let down = StateVector::vacuum(layout.clone());
        assert!((down.expectation(&s.z).unwrap().re + 1.0).abs() < 1e-15);
        let raised = crate::fock::operator::LinearOperator::apply(&s.plus, down.amplitudes());
        assert_eq!(raised[layout.motional_dim()], linalg::ONE);
        let xx = &s.x * &s.x;
        let id = OperatorMatrix::identity(layout.clone()).unwrap();
        assert!(linalg::max_abs_diff(xx.matrix(), id.matrix()) < 1e-15);
        let anti = s.plus.anticommutator(&s.minus);
        assert!(linalg::max_abs_diff(anti.matrix(), id.matrix()) < 1e-15);
        let xy = s.x.commutator(&s.y);
        let two_i_z = s.z.scaled(linalg::c(0.0, 2.0));
        assert!(linalg::max_abs_diff(xy.matrix(), two_i_z.matrix()) < 1e-15);
    }

    #[test]
    fn vacuum_quadrature_variance() {
        let layout = HilbertLayout::new(1, 6, 0).unwrap();
        let (x, _) = build_quadratures(&layout, 0).unwrap();
        let vac = StateVector::vacuum(layout);
        assert!(vac.expectation(&x).unwrap().norm() < 1e-15);
        assert!((variance(&x, &vac).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn variance_requires_hermitian() {
        let layout = HilbertLayout::new(1, 3, 0).unwrap();
        let a = build_annihilation(&layout, 0).unwrap();
        assert!(variance(&a, &StateVector::vacuum(layout)).is_err());
    }
}
