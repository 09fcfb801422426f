use crate::error::{Error, Result};
use crate::fock::{LinearOperator, StateVector};
use crate::linalg;
use crate::metrology::encode::collective_quadratures_kron;

/// Parameter order everywhere in this module is `(Ω+, Ω-)`.
pub type Matrix2 = [[f64; 2]; 2];

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    Ok(())
}

/// `diag(2 e^{2r} t^2, 2 e^{2r} t^2)`.
pub fn qfi_matrix_analytic(r: f64, t: f64) -> Result<Matrix2> {
    check_time(t)?;
    let d = 2.0 * (2.0 * r).exp() * t * t;
    Ok([[d, 0.0], [0.0, d]])
}

/// `δΩ±^2 = e^{-2r} t^{-2} / 2`.
pub fn variance_analytic(r: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(0.5 * (-2.0 * r).exp() / (t * t))
}

/// Vacuum-probe variance `t^{-2} / 2`, the unsqueezed reference.
pub fn classical_variance(t: f64) -> Result<f64> {
    variance_analytic(0.0, t)
}

/// `10 log10(e^{2r})`.
pub fn analytic_enhancement_db(r: f64) -> f64 {
    20.0 * r * std::f64::consts::LOG10_E
}

/// `F_mn = 2<{H_m, H_n}> - 4<H_m><H_n>` with generators `H = (P+ t, X- t)`.
pub fn qfi_matrix_numeric(probe: &StateVector, t: f64) -> Result<Matrix2> {
    check_time(t)?;
    let q = collective_quadratures_kron(probe.layout())?;
    let psi = probe.amplitudes();
    let hp: Vec<_> = q.p_plus.apply(psi).into_iter().map(|z| z * t).collect();
    let hm: Vec<_> = q.x_minus.apply(psi).into_iter().map(|z| z * t).collect();
    let gens = [hp, hm];
    let means: Vec<f64> = gens.iter().map(|h| linalg::inner(psi, h).re).collect();
    let mut f = [[0.0; 2]; 2];
    for m in 0..2 {
        for n in 0..2 {
            // <{A, B}> = 2 Re <A psi | B psi> for Hermitian A, B.
            let anti = 2.0 * linalg::inner(&gens[m], &gens[n]).re;
            f[m][n] = 2.0 * anti - 4.0 * means[m] * means[n];
        }
    }
    Ok(f)
}

pub fn inverse(m: &Matrix2) -> Result<Matrix2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < f64::MIN_POSITIVE {
        return Err(Error::Numerical("singular Fisher matrix".into()));
    }
    Ok([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

pub fn trace(m: &Matrix2) -> f64 {
    m[0][0] + m[1][1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::HilbertLayout;

    #[test]
    fn analytic_values_and_saturation() {
        assert_eq!(qfi_matrix_analytic(0.0, 1.0).unwrap(), [[2.0, 0.0], [0.0, 2.0]]);
        assert!((qfi_matrix_analytic(0.79, 1.0).unwrap()[0][0] - 9.7099).abs() < 1e-3);
        for r in [0.0, 0.3, 0.79] {
            for t in [1.0, 2.0] {
                let f = qfi_matrix_analytic(r, t).unwrap();
                let v = variance_analytic(r, t).unwrap();
                assert!((f[0][0] * v - 1.0).abs() < 1e-15);
                let tr = trace(&inverse(&f).unwrap());
                assert!((tr - (-2.0 * r).exp() / (t * t)).abs() < 1e-12);
            }
        }
        assert!(qfi_matrix_analytic(0.5, 0.0).is_err());
        assert!((analytic_enhancement_db(0.79) - 6.862).abs() < 1e-3);
    }

    #[test]
    fn vacuum_probe() {
        let layout = HilbertLayout::new(2, 6, 0).unwrap();
        let f = qfi_matrix_numeric(&StateVector::vacuum(layout), 1.0).unwrap();
        assert!((f[0][0] - 2.0).abs() < 1e-12 && (f[1][1] - 2.0).abs() < 1e-12);
        assert!(f[0][1].abs() < 1e-12 && (f[0][1] - f[1][0]).abs() < 1e-12);
    }
}
