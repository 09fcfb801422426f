//! Blue-sideband flopping models, synthetic data, population fits and the
//! fidelity lower bound.

pub mod bound;
pub mod fit;
pub mod model;

pub use bound::{fidelity_bound_check, fidelity_bound_sweep, BoundSweep, FidelityBoundCheck};
pub use fit::{fit_populations, project_capped_simplex, FitConfig, PopulationEstimate};
pub use model::{
    evaluate, linear_grid, model_fock2d, model_single, model_three, model_two_ion,
    synthesize_curve, FlopCurve, Model, ModelSpec,
};

use crate::fock::QuantumState;

/// Joint Fock populations with every occupation `<= n_max`, row-major.
/// Spins are summed out; mass above `n_max` is dropped.
pub fn fock_populations<S: QuantumState>(state: &S, n_max: usize) -> Vec<f64> {
    let motional = state.layout().motional();
    let levels = n_max + 1;
    let mut out = vec![0.0; levels.pow(motional.modes() as u32)];
    for (i, p) in state.motional_populations().into_iter().enumerate() {
        let occ = motional.occupations(i);
        if occ.iter().all(|&n| n <= n_max) {
            let idx = occ.iter().fold(0, |acc, &n| acc * levels + n);
            out[idx] += p;
        }
    }
    out
}
