use crate::error::{Error, Result};
use crate::fock::operator::{LinearOperator, OperatorMatrix};
use crate::fock::state::{DensityOperator, StateVector};
use crate::linalg::{self, HermitianEigen, C64};

/// Cached eigendecomposition of a Hermitian `H` giving `exp(-i H t)` for
/// any `t` at the cost of matrix products only.
#[derive(Clone, Debug)]
pub struct Propagator {
    hamiltonian: OperatorMatrix,
    eigen: HermitianEigen,
}

impl Propagator {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        if !h.is_hermitian() {
            return Err(Error::NotHermitian {
                deviation: h.hermiticity_deviation(),
            });
        }
        Ok(Self {
            hamiltonian: h.clone(),
            eigen: HermitianEigen::new(h.matrix())?,
        })
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn unitary(&self, t: f64) -> OperatorMatrix {
        let u = self.eigen.map(|l| C64::cis(-l * t));
        OperatorMatrix::from_matrix(self.hamiltonian.layout().clone(), u)
            .expect("layout already validated")
    }

    pub fn apply_state(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        self.hamiltonian.layout().same_shape(state.layout())?;
        let amps = self.eigen.map_apply(|l| C64::cis(-l * t), state.amplitudes());
        StateVector::new(state.layout().clone(), amps)
    }

    pub fn apply_density(&self, rho: &DensityOperator, t: f64) -> Result<DensityOperator> {
        self.hamiltonian.layout().same_shape(rho.layout())?;
        let u = self.unitary(t);
        conjugate(&u, rho)
    }
}

/// `U rho U^dag`.
pub fn conjugate(u: &OperatorMatrix, rho: &DensityOperator) -> Result<DensityOperator> {
    u.layout().same_shape(rho.layout())?;
    let out = u.matrix() * rho.matrix() * u.matrix().adjoint();
    DensityOperator::from_evolved(rho.layout().clone(), out)
}

/// States that can be propagated under a Hamiltonian.
pub trait Evolve: Sized {
    fn evolve_with(&self, propagator: &Propagator, t: f64) -> Result<Self>;
}

impl Evolve for StateVector {
    fn evolve_with(&self, propagator: &Propagator, t: f64) -> Result<Self> {
        propagator.apply_state(self, t)
    }
}

impl Evolve for DensityOperator {
    fn evolve_with(&self, propagator: &Propagator, t: f64) -> Result<Self> {
        propagator.apply_density(self, t)
    }
}

/// `exp(-i H t)` applied to a state or density operator.
pub fn evolve<S: Evolve>(state: &S, h: &OperatorMatrix, t: f64) -> Result<S> {
    state.evolve_with(&Propagator::new(h)?, t)
}

/// `exp(z A) v` by a truncated Taylor series with substeps small enough
/// that every partial series converges to machine precision. Only
/// operator-vector products are used, so `A` may be Kronecker-structured.
pub fn expm_action<O: LinearOperator + ?Sized>(op: &O, z: C64, v: &[C64]) -> Vec<C64> {
    const MAX_TERMS: usize = 60;
    let scale = z.norm() * op.one_norm_bound();
    let steps = scale.ceil().max(1.0) as usize;
    let h = z / steps as f64;
    let mut x = v.to_vec();
    for _ in 0..steps {
        let mut term = x.clone();
        let mut acc = x.clone();
        for k in 1..=MAX_TERMS {
            term = op.apply(&term);
            let f = h / k as f64;
            term.iter_mut().for_each(|t| *t *= f);
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
            if linalg::norm(&term) <= 1e-17 * linalg::norm(&acc) {
                break;
            }
        }
        x = acc;
    }
    x
}

/// `exp(-i H t) psi` for a Hermitian operator given only by its action.
pub fn evolve_state_action<O: LinearOperator + ?Sized>(
    state: &StateVector,
    h: &O,
    t: f64,
) -> Result<StateVector> {
    state.layout().same_shape(h.layout())?;
    if !h.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: f64::NAN,
        });
    }
    let amps = expm_action(h, linalg::c(0.0, -t), state.amplitudes());
    StateVector::new(state.layout().clone(), amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::layout::HilbertLayout;
    use crate::fock::ops::build_spin_ops;
    use faer::Mat;

    #[test]
    fn zero_hamiltonian_is_identity() {
        let layout = HilbertLayout::new(1, 3, 1).unwrap();
        let h = OperatorMatrix::zeros(layout.clone()).unwrap();
        let u = Propagator::new(&h).unwrap().unitary(1.7);
        let id = Mat::<C64>::identity(layout.dim(), layout.dim());
        assert!(linalg::max_abs_diff(u.matrix(), id.as_ref()) < 1e-15);
    }

    #[test]
    fn two_level_rotation() {
        let layout = HilbertLayout::new(1, 0, 1).unwrap();
        let s = build_spin_ops(&layout, 0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let psi = StateVector::new(layout.clone(), vec![linalg::real(r), linalg::real(r)]).unwrap();
        let out = evolve(&psi, &s.z, std::f64::consts::FRAC_PI_2).unwrap();
        let a = out.amplitudes();
        assert!((a[0] - linalg::c(0.0, r)).norm() < 1e-14);
        assert!((a[1] - linalg::c(0.0, -r)).norm() < 1e-14);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let layout = HilbertLayout::new(1, 2, 0).unwrap();
        let a = crate::fock::ops::build_annihilation(&layout, 0).unwrap();
        assert!(matches!(Propagator::new(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn taylor_action_matches_eigen_route() {
        let layout = HilbertLayout::new(2, 5, 0).unwrap();
        let a1 = crate::fock::kron::KronOperator::annihilation(&layout, 0).unwrap();
        let a2 = crate::fock::kron::KronOperator::annihilation(&layout, 1).unwrap();
        let x = &(&a1 * &a2) + &(&a1 * &a2).adjoint();
        let h = &(&x * 0.7) + &(&a1.adjoint() * &a1);
        let psi = StateVector::fock(layout, &[1, 2]).unwrap();
        let via_eig = evolve(&psi, &h.to_operator().unwrap(), 1.3).unwrap();
        let via_taylor = evolve_state_action(&psi, &h, 1.3).unwrap();
        let err = via_eig
            .amplitudes()
            .iter()
            .zip(via_taylor.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-11, "{err}");
    }
}
