use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    expm_action, pauli, quadratures_kron, HilbertLayout, KronOperator,
    OperatorMatrix, QuantumState, StateVector, TRUNCATION_LIMIT,
};
use crate::linalg;

/// Collective quadratures `X± = (X1 ± X2)/√2`, `P± = (P1 ± P2)/√2`.
#[derive(Clone, Debug)]
pub struct CollectiveQuadratures<T> {
    pub x_plus: T,
    pub x_minus: T,
    pub p_plus: T,
    pub p_minus: T,
}

pub fn collective_quadratures_kron(layout: &HilbertLayout) -> Result<CollectiveQuadratures<KronOperator>> {
    if layout.modes() != 2 {
        return Err(Error::InvalidArgument(format!(
            "collective quadratures need a two-mode layout, got {} modes",
            layout.modes()
        )));
    }
    let (x1, p1) = quadratures_kron(layout, 0)?;
    let (x2, p2) = quadratures_kron(layout, 1)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(CollectiveQuadratures {
        x_plus: &(&x1 + &x2) * s,
        x_minus: &(&x1 - &x2) * s,
        p_plus: &(&p1 + &p2) * s,
        p_minus: &(&p1 - &p2) * s,
    })
}

pub fn collective_quadratures(layout: &HilbertLayout) -> Result<CollectiveQuadratures<OperatorMatrix>> {
    let k = collective_quadratures_kron(layout)?;
    Ok(CollectiveQuadratures {
        x_plus: k.x_plus.to_operator()?,
        x_minus: k.x_minus.to_operator()?,
        p_plus: k.p_plus.to_operator()?,
        p_minus: k.p_minus.to_operator()?,
    })
}

/// Displacement rates along the two squeezed axes and the interrogation time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementParams {
    /// rad/s
    pub omega_plus: f64,
    /// rad/s
    pub omega_minus: f64,
    /// seconds
    pub t: f64,
}

impl DisplacementParams {
    pub fn new(omega_plus: f64, omega_minus: f64, t: f64) -> Result<Self> {
        let p = Self {
            omega_plus,
            omega_minus,
            t,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidArgument(format!("t must be >= 0, got {}", self.t)));
        }
        if !self.omega_plus.is_finite() || !self.omega_minus.is_finite() {
            return Err(Error::InvalidArgument("displacement rates must be finite".into()));
        }
        Ok(())
    }
}

fn apply_exp(op: &KronOperator, theta: f64, amps: &[linalg::C64]) -> Vec<linalg::C64> {
    if theta == 0.0 {
        return amps.to_vec();
    }
    expm_action(op, linalg::c(0.0, -theta), amps)
}

/// `exp(-i Ω+ P+ t) exp(-i Ω- X- t) |psi>`. The result must keep its top two
/// Fock levels below the truncation limit.
pub fn displacement_encode(state: &StateVector, params: &DisplacementParams) -> Result<StateVector> {
    params.validate()?;
    let q = collective_quadratures_kron(state.layout())?;
    let amps = apply_exp(&q.x_minus, params.omega_minus * params.t, state.amplitudes());
    let amps = apply_exp(&q.p_plus, params.omega_plus * params.t, &amps);
    let out = StateVector::normalized(state.layout().clone(), amps)?;
    out.check_truncation(TRUNCATION_LIMIT)?;
    Ok(out)
}

/// Evolution under `Ω+ P+ σx` and then `Ω- X- σx`, each for `t`. The spin
/// must be a `σx` eigenstate; on the `+1` sector this is
/// [`displacement_encode`], on the `-1` sector the displacements flip sign.
pub fn spin_conditioned_encode(state: &StateVector, params: &DisplacementParams) -> Result<StateVector> {
    params.validate()?;
    let layout = state.layout();
    if layout.spins() == 0 {
        return Err(Error::NoSpin);
    }
    let sx = KronOperator::spin(layout, 0, &pauli::x())?;
    let mean_x = state.expectation(&sx)?.re;
    if (mean_x.abs() - 1.0).abs() > 1e-6 {
        return Err(Error::SpinPreparation(format!(
            "spin must be a sigma_x eigenstate; <sigma_x> = {mean_x:.6}"
        )));
    }
    let q = collective_quadratures_kron(layout)?;
    let h_plus = &q.p_plus * &sx;
    let h_minus = &q.x_minus * &sx;
    let amps = apply_exp(&h_plus, params.omega_plus * params.t, state.amplitudes());
    let amps = apply_exp(&h_minus, params.omega_minus * params.t, &amps);
    let out = StateVector::normalized(layout.clone(), amps)?;
    out.check_truncation(TRUNCATION_LIMIT)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::variance;
    use crate::squeeze::{tmss_state, SqueezeSpec};

    #[test]
    fn collective_commutators() {
        let layout = HilbertLayout::new(2, 10, 0).unwrap();
        let q = collective_quadratures(&layout).unwrap();
        // Truncation leaves `[X, P] = i` except on the top level of each
        // mode, so the commuting pairs vanish off the diagonal and on
        // diagonal entries whose occupations are all below the cutoff or all at it.
        let same_edge = |i: usize| {
            let occ = layout.occupations(i);
            occ.iter().all(|&n| n < 10) || occ.iter().all(|&n| n == 10)
        };
        for c in [q.x_plus.commutator(&q.p_minus), q.x_minus.commutator(&q.p_plus)] {
            for i in 0..layout.dim() {
                for j in 0..layout.dim() {
                    if i != j || same_edge(i) {
                        assert!(c.get(i, j).norm() <= 1e-12);
                    }
                }
            }
        }
        let c = q.x_plus.commutator(&q.p_plus);
        for i in 0..layout.dim() {
            if layout.occupations(i).iter().all(|&n| n < 10) {
                assert!((c.get(i, i) - linalg::I).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn encode_shifts_means_and_keeps_variances() {
        let layout = HilbertLayout::new(2, 30, 0).unwrap();
        let psi = tmss_state(&layout, &SqueezeSpec::two_mode(0.79)).unwrap();
        let w = 2.0 * std::f64::consts::PI * 5000.0;
        let params = DisplacementParams::new(w, w, 1e-5).unwrap();
        let out = displacement_encode(&psi, &params).unwrap();
        let q = collective_quadratures_kron(&layout).unwrap();
        let shift = w * 1e-5;
        assert!((out.expectation(&q.x_plus).unwrap().re - shift).abs() < 1e-8);
        assert!((out.expectation(&q.p_minus).unwrap().re + shift).abs() < 1e-8);
        let v0 = variance(&q.x_plus, &psi).unwrap();
        let v1 = variance(&q.x_plus, &out).unwrap();
        assert!((v0 - v1).abs() < 1e-8);
        assert!((v0 - (-1.58f64).exp() / 2.0).abs() < 1e-6);
    }

    #[test]
    fn spin_conditioned_encode_requires_sigma_x_eigenstate() {
        let layout = HilbertLayout::new(2, 6, 1).unwrap();
        let down = StateVector::vacuum(layout);
        let params = DisplacementParams::new(0.1, 0.1, 1.0).unwrap();
        assert!(matches!(
            spin_conditioned_encode(&down, &params),
            Err(Error::SpinPreparation(_))
        ));
    }
}
