//! Fixtures shared by the criterion benches.

use std::f64::consts::PI;

use squeezelab::fock::{thermal_state, DensityOperator, HilbertLayout};
use squeezelab::reservoir::{CycleConfig, ReservoirEngine};

pub const OMEGA: f64 = 2.0 * PI * 6.8e3;

/// Two-mode engine at `r` with one spin ancilla, plus a thermal start.
pub fn two_mode_engine(r: f64, cutoff: usize) -> (ReservoirEngine, DensityOperator) {
    let layout = HilbertLayout::new(2, cutoff, 0).expect("valid layout");
    let engine = ReservoirEngine::new(&layout, &CycleConfig::ideal(r, OMEGA, 2, 1)).expect("valid config");
    let rho = thermal_state(&layout, 0.2).expect("thermal state fits");
    (engine, rho)
}

pub fn k1_populations() -> [f64; 5] {
    [0.91, 0.03, 0.03, 0.01, 0.02]
}
