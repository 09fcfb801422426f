use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{quadratures_kron, variance, HilbertLayout, KronOperator, QuantumState};
use crate::metrology::encode::collective_quadratures_kron;
use crate::squeeze::{three_mode_state, SqueezeSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EPRReport {
    pub modes: usize,
    /// Variance for two modes, raw second moment for three.
    pub var_x_plus: f64,
    pub var_p_minus: f64,
    pub delta_epr: f64,
    pub bound: f64,
    pub entangled: bool,
}

/// Three-mode `X+ = X1 + (X2 + X3)/√2` and `P- = P1 - (P2 + P3)/√2`.
pub fn three_mode_epr_quadratures(layout: &HilbertLayout) -> Result<(KronOperator, KronOperator)> {
    require_modes(layout, 3)?;
    let (x1, p1) = quadratures_kron(layout, 0)?;
    let (x2, p2) = quadratures_kron(layout, 1)?;
    let (x3, p3) = quadratures_kron(layout, 2)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x_plus = &x1 + &(&(&x2 + &x3) * s);
    let p_minus = &p1 - &(&(&p2 + &p3) * s);
    Ok((x_plus, p_minus))
}

fn require_modes(layout: &HilbertLayout, modes: usize) -> Result<()> {
    if layout.modes() != modes {
        return Err(Error::InvalidArgument(format!(
            "expected a {modes}-mode layout, got {} modes",
            layout.modes()
        )));
    }
    Ok(())
}

/// Two modes: `var X+ + var P-` against 1. Three modes: `<X+^2> + <P-^2>`
/// against 1/2, without mean subtraction.
pub fn duan_epr<S: QuantumState>(state: &S, mode_count: usize) -> Result<EPRReport> {
    let layout = state.layout();
    let (vx, vp, bound) = match mode_count {
        2 => {
            require_modes(layout, 2)?;
            let q = collective_quadratures_kron(layout)?;
            (variance(&q.x_plus, state)?, variance(&q.p_minus, state)?, 1.0)
        }
        3 => {
            let (x, p) = three_mode_epr_quadratures(layout)?;
            (state.second_moment(&x)?.re, state.second_moment(&p)?.re, 0.5)
        }
        n => {
            return Err(Error::InvalidArgument(format!(
                "EPR criterion defined for 2 or 3 modes, got {n}"
            )))
        }
    };
    let delta = vx + vp;
    Ok(EPRReport {
        modes: mode_count,
        var_x_plus: vx,
        var_p_minus: vp,
        delta_epr: delta,
        bound,
        entangled: delta < bound,
    })
}

/// Axes `(X1+X2)/√2`, `(X1+X3)/√2`, `(P1-P2-P3)/√3`, each with vacuum variance 1/2.
pub fn three_mode_axes(layout: &HilbertLayout) -> Result<[KronOperator; 3]> {
    require_modes(layout, 3)?;
    let (x1, p1) = quadratures_kron(layout, 0)?;
    let (x2, p2) = quadratures_kron(layout, 1)?;
    let (x3, p3) = quadratures_kron(layout, 2)?;
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let s3 = 1.0 / 3f64.sqrt();
    Ok([
        &(&x1 + &x2) * s2,
        &(&x1 + &x3) * s2,
        &(&(&p1 - &p2) - &p3) * s3,
    ])
}

/// `10 log10(0.5 / var)` along each of [`three_mode_axes`].
pub fn axis_gains<S: QuantumState>(state: &S) -> Result<[f64; 3]> {
    let axes = three_mode_axes(state.layout())?;
    let mut out = [0.0; 3];
    for (g, op) in out.iter_mut().zip(&axes) {
        *g = 10.0 * (0.5 / variance(op, state)?).log10();
    }
    Ok(out)
}

/// Gains of the three-mode squeezed vacuum at `r`, on the smallest cutoff
/// meeting the tail limit.
pub fn three_mode_gains(r: f64) -> Result<[f64; 3]> {
    let cutoff = SqueezeSpec::three_mode(r).min_cutoff().max(1);
    let layout = HilbertLayout::new(3, cutoff, 0)?;
    axis_gains(&three_mode_state(&layout, r)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::StateVector;
    use crate::squeeze::tmss_state;

    #[test]
    fn two_mode_vacuum_is_boundary() {
        let rep = duan_epr(&StateVector::vacuum(HilbertLayout::new(2, 6, 0).unwrap()), 2).unwrap();
        assert!((rep.delta_epr - 1.0).abs() < 1e-12);
        assert!(!rep.entangled);
        assert_eq!(rep.delta_epr, rep.var_x_plus + rep.var_p_minus);
    }

    #[test]
    fn tmss_value() {
        let layout = HilbertLayout::new(2, 24, 0).unwrap();
        let rep = duan_epr(&tmss_state(&layout, &SqueezeSpec::two_mode(0.79)).unwrap(), 2).unwrap();
        assert!((rep.delta_epr - (-1.58f64).exp()).abs() < 1e-6);
        assert!(rep.entangled);
    }

    #[test]
    fn gains_vanish_at_zero() {
        for g in three_mode_gains(0.0).unwrap() {
            assert!(g.abs() < 1e-12);
        }
        assert!(duan_epr(&StateVector::vacuum(HilbertLayout::new(2, 4, 0).unwrap()), 4).is_err());
    }
}
