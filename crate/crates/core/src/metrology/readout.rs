//! Spin-mediated readout of `<A>` and `<A^2>` for a motional observable `A`.
//!
//! The probe pulse is `U_p(t) = exp(-i (Ω_p t / 2) A σ_x)`, for which
//! `U_p^dag σ_z U_p = cos(Ω_p t A) σ_z + sin(Ω_p t A) σ_y`. The curve is
//! `f(t) = <σ_z>` after the pulse.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{expm_action, pauli, KronOperator, LinearOperator, QuantumState, StateVector};
use crate::linalg::{self, C64};
use crate::metrology::encode::collective_quadratures_kron;

const PREP_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinPrep {
    /// `+1` eigenstate of `σ_y`; the curve is `<sin(Ω_p t A)>`.
    SigmaY,
    /// `+1` eigenstate of `σ_z`; the curve is `<cos(Ω_p t A)>`.
    SigmaZ,
}

impl SpinPrep {
    /// Amplitudes in the `(down, up)` basis.
    pub fn amplitudes(self) -> [C64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            SpinPrep::SigmaY => [linalg::real(s), linalg::c(0.0, -s)],
            SpinPrep::SigmaZ => [linalg::ZERO, linalg::ONE],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutAxis {
    XPlus,
    PMinus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutCurve {
    pub prep: SpinPrep,
    pub axis: ReadoutAxis,
    /// rad/s
    pub omega_p: f64,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

/// Attach a single spin in state `prep` to a spinless motional state.
pub fn prepare_spin(motion: &StateVector, prep: SpinPrep) -> Result<StateVector> {
    if motion.layout().spins() != 0 {
        return Err(Error::InvalidArgument("motional state already carries a spin".into()));
    }
    StateVector::product(&prep.amplitudes(), motion)
}

fn detect_prep(state: &StateVector) -> Result<SpinPrep> {
    let layout = state.layout();
    if layout.spins() != 1 {
        return Err(Error::SpinPreparation(format!(
            "readout needs exactly one spin, layout has {}",
            layout.spins()
        )));
    }
    let y = state.expectation(&KronOperator::spin(layout, 0, &pauli::y())?)?.re;
    let z = state.expectation(&KronOperator::spin(layout, 0, &pauli::z())?)?.re;
    if (y - 1.0).abs() <= PREP_TOL {
        Ok(SpinPrep::SigmaY)
    } else if (z - 1.0).abs() <= PREP_TOL {
        Ok(SpinPrep::SigmaZ)
    } else {
        Err(Error::SpinPreparation(format!(
            "spin must be the +1 eigenstate of sigma_y or sigma_z; <sigma_y> = {y:.6}, <sigma_z> = {z:.6}"
        )))
    }
}

pub fn readout_observable(layout: &crate::fock::HilbertLayout, axis: ReadoutAxis) -> Result<KronOperator> {
    let q = collective_quadratures_kron(layout)?;
    Ok(match axis {
        ReadoutAxis::XPlus => q.x_plus,
        ReadoutAxis::PMinus => q.p_minus,
    })
}

/// `<σ_z>` after `U_p(t)` for each `t` in `t_grid`. `state` carries one spin
/// prepared along `σ_y` or `σ_z`.
pub fn spin_readout_curve(state: &StateVector, axis: ReadoutAxis, omega_p: f64, t_grid: &[f64]) -> Result<ReadoutCurve> {
    let prep = detect_prep(state)?;
    if !omega_p.is_finite() || omega_p == 0.0 {
        return Err(Error::InvalidArgument(format!("probe rate must be finite and nonzero, got {omega_p}")));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument("probe times must be finite and >= 0".into()));
    }
    let layout = state.layout();
    let a = readout_observable(layout, axis)?;
    let sx = KronOperator::spin(layout, 0, &pauli::x())?;
    let h = &(&a * &sx) * (0.5 * omega_p);
    let sz = KronOperator::spin(layout, 0, &pauli::z())?;
    let values = t_grid
        .iter()
        .map(|&t| {
            let psi = expm_action(&h, linalg::c(0.0, -t), state.amplitudes());
            let z = sz.apply(&psi);
            linalg::inner(&psi, &z).re
        })
        .collect();
    Ok(ReadoutCurve {
        prep,
        axis,
        omega_p,
        t: t_grid.to_vec(),
        values,
    })
}

/// Number of polynomial terms fitted to a curve.
pub const FIT_TERMS: usize = 6;

/// Parity-constrained polynomial least squares in `s = t / t_max`: odd powers
/// for a `σ_y` curve, even powers for a `σ_z` curve. Returns `<A>` or
/// `<A^2>` respectively.
pub fn moment_from_curve(curve: &ReadoutCurve) -> Result<f64> {
    let n = curve.t.len();
    if n != curve.values.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: curve.values.len(),
        });
    }
    let terms = FIT_TERMS.min(n.saturating_sub(1)).max(1);
    if n <= terms {
        return Err(Error::DegenerateGrid {
            points: n,
            parameters: terms,
        });
    }
    let t_max = curve.t.iter().cloned().fold(0.0, f64::max);
    if t_max <= 0.0 {
        return Err(Error::DegenerateGrid {
            points: n,
            parameters: terms,
        });
    }
    let first_power = match curve.prep {
        SpinPrep::SigmaY => 1,
        SpinPrep::SigmaZ => 0,
    };
    let design = Mat::<f64>::from_fn(n, terms, |i, k| (curve.t[i] / t_max).powi((first_power + 2 * k) as i32));
    let coeffs = least_squares(&design, &curve.values)?;
    let scale = curve.omega_p * t_max;
    Ok(match curve.prep {
        SpinPrep::SigmaY => coeffs[0] / scale,
        SpinPrep::SigmaZ => -2.0 * coeffs[1] / (scale * scale),
    })
}

/// `(<A>, <A^2>)` from a `σ_y` curve and a `σ_z` curve of the same axis.
pub fn moments_from_curves(y_curve: &ReadoutCurve, z_curve: &ReadoutCurve) -> Result<(f64, f64)> {
    if y_curve.prep != SpinPrep::SigmaY || z_curve.prep != SpinPrep::SigmaZ {
        return Err(Error::SpinPreparation("need one sigma_y curve and one sigma_z curve".into()));
    }
    if y_curve.axis != z_curve.axis {
        return Err(Error::InvalidArgument("curves probe different observables".into()));
    }
    Ok((moment_from_curve(y_curve)?, moment_from_curve(z_curve)?))
}

fn least_squares(a: &Mat<f64>, b: &[f64]) -> Result<Vec<f64>> {
    use faer::linalg::solvers::SolveLstsq;
    let rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
    let x = a.qr().solve_lstsq(&rhs);
    let out: Vec<f64> = (0..a.ncols()).map(|k| x[(k, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("readout fit produced a non-finite coefficient".into()));
    }
    Ok(out)
}
