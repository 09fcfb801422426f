//! The two-mode fidelity lower bound `A >= p1(0) p2(0)`.
//!
//! With `A` the joint engineered ground population, `B`, `C` the
//! populations with exactly one mode excited and `D` the rest,
//! `p1(0) = A + B` and `p2(0) = A + C`. Since `A + B + C + D = 1`, the margin
//! `A - (A+B)(A+C)` equals `AD - BC`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityBoundCheck {
    pub margin: f64,
    pub holds: bool,
}

pub fn fidelity_bound_check(a: f64, b: f64, c: f64, d: f64) -> Result<FidelityBoundCheck> {
    let parts = [a, b, c, d];
    if parts.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Constraint(format!("populations must be >= 0, got {parts:?}")));
    }
    let total: f64 = parts.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::Constraint(format!("A + B + C + D = {total}, expected 1")));
    }
    let margin = a - (a + b) * (a + c);
    Ok(FidelityBoundCheck {
        margin,
        holds: margin >= 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSweep {
    pub p1: f64,
    pub p2: f64,
    pub points: usize,
    pub min_margin: f64,
    /// `A` at the minimum margin.
    pub argmin: f64,
    /// `A` values in the region where the bound fails.
    pub violations: usize,
    /// Smallest `A` at which the bound holds.
    pub threshold: Option<f64>,
}

/// Scans `A` over `[a_min, min(p1, p2)]` in steps of `step` with
/// `B = p1 - A`, `C = p2 - A`, `D = 1 - p1 - p2 + A`, skipping points where
/// `D < 0`.
pub fn fidelity_bound_sweep(p1: f64, p2: f64, a_min: f64, step: f64) -> Result<BoundSweep> {
    if !(step > 0.0) || !(0.0..=1.0).contains(&p1) || !(0.0..=1.0).contains(&p2) {
        return Err(Error::InvalidArgument("invalid sweep region".into()));
    }
    let a_max = p1.min(p2);
    let n = ((a_max - a_min) / step + 1e-9).floor() as i64;
    let mut out = BoundSweep {
        p1,
        p2,
        points: 0,
        min_margin: f64::INFINITY,
        argmin: f64::NAN,
        violations: 0,
        threshold: None,
    };
    for i in 0..=n.max(-1) {
        let a = a_min + i as f64 * step;
        let d = 1.0 - p1 - p2 + a;
        if d < 0.0 {
            continue;
        }
        let check = fidelity_bound_check(a, p1 - a, p2 - a, d)?;
        out.points += 1;
        if check.margin < out.min_margin {
            out.min_margin = check.margin;
            out.argmin = a;
        }
        if check.holds {
            out.threshold.get_or_insert(a);
        } else {
            out.violations += 1;
        }
    }
    if out.points == 0 {
        return Err(Error::Constraint("sweep region contains no feasible point".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_cases() {
        let c = fidelity_bound_check(0.86, 0.05, 0.09, 0.0).unwrap();
        assert!((c.margin + 0.0045).abs() < 1e-12);
        assert!(!c.holds);
        assert_eq!(fidelity_bound_check(1.0, 0.0, 0.0, 0.0).unwrap().margin, 0.0);
        let (p1, p2) = (0.91f64, 0.95f64);
        let c = fidelity_bound_check(p1 * p2, p1 * (1.0 - p2), (1.0 - p1) * p2, (1.0 - p1) * (1.0 - p2)).unwrap();
        assert!(c.margin.abs() < 1e-15);
        assert!(fidelity_bound_check(0.5, 0.5, 0.5, 0.0).is_err());
        assert!(fidelity_bound_check(1.1, -0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn margin_equals_ad_minus_bc() {
        let (a, b, c, d) = (0.6, 0.1, 0.2, 0.1);
        let m = fidelity_bound_check(a, b, c, d).unwrap().margin;
        assert!((m - (a * d - b * c)).abs() < 1e-15);
    }
}
