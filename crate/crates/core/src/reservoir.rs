//! Dissipative preparation of multimode squeezed states.
//!
//! A cycle applies, for every mode in `mode_order`, a coherent pulse of the
//! engineered coupling `H_i = Omega_i (K_i sigma_plus + K_i^dag sigma_minus)`
//! followed by an instantaneous optical pump that resets the spin to down.
//! The squeezed vacuum is dark to every `H_i`, so it is the fixed point.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    conjugate, DensityOperator, HilbertLayout, KronOperator, OperatorMatrix, QuantumState,
    StateVector,
};
use crate::linalg::{self, HermitianEigen, C64};
use crate::squeeze::{self, SqueezeSpec, TruncationPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseDuration {
    /// `pi / (2 Omega_i)` for the pulse on mode `i`.
    QuarterPeriod,
    /// A fixed duration in seconds for every pulse.
    Seconds(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleConfig {
    /// Target squeezing parameter.
    pub r: f64,
    /// Coupling rate of each engineered mode, rad/s.
    pub omega: Vec<f64>,
    pub pulse: PulseDuration,
    pub cycles: usize,
    /// Standard deviation of the per-pulse motional detuning, rad/s.
    pub drift_sigma: f64,
    pub seed: u64,
    /// Modes pulsed, in order, within one cycle.
    pub mode_order: Vec<usize>,
    pub truncation: TruncationPolicy,
}

impl CycleConfig {
    /// Ideal quarter-period pulses on `modes` modes at a common rate.
    pub fn ideal(r: f64, omega: f64, modes: usize, cycles: usize) -> Self {
        Self {
            r,
            omega: vec![omega; modes],
            pulse: PulseDuration::QuarterPeriod,
            cycles,
            drift_sigma: 0.0,
            seed: 0,
            mode_order: (0..modes).collect(),
            truncation: TruncationPolicy::Error,
        }
    }

    pub fn modes(&self) -> usize {
        self.omega.len()
    }

    pub fn squeeze_spec(&self) -> SqueezeSpec {
        SqueezeSpec {
            r: self.r,
            phi: 0.0,
            modes: (0..self.modes()).collect(),
            policy: self.truncation,
        }
    }

    pub fn pulse_duration(&self, mode: usize) -> f64 {
        match self.pulse {
            PulseDuration::QuarterPeriod => std::f64::consts::FRAC_PI_2 / self.omega[mode],
            PulseDuration::Seconds(t) => t,
        }
    }

    pub fn validate(&self, layout: &HilbertLayout) -> Result<()> {
        if !(2..=3).contains(&self.modes()) || layout.modes() != self.modes() {
            return Err(Error::InvalidArgument(format!(
                "{} coupling rates given for a {}-mode layout; two or three modes are supported",
                self.modes(),
                layout.modes()
            )));
        }
        if self.omega.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("coupling rates must be > 0".into()));
        }
        if !(self.drift_sigma >= 0.0 && self.drift_sigma.is_finite()) {
            return Err(Error::InvalidArgument("drift_sigma must be >= 0".into()));
        }
        if let PulseDuration::Seconds(t) = self.pulse {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidArgument("pulse duration must be >= 0".into()));
            }
        }
        if self.mode_order.is_empty() {
            return Err(Error::InvalidArgument("mode_order is empty".into()));
        }
        for &m in &self.mode_order {
            layout.check_mode(m)?;
        }
        self.squeeze_spec().check(layout)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// Completed cycles; 0 is the initial state.
    pub cycle: usize,
    /// `prod_i P(0^K_i)`.
    pub f_lower: f64,
    /// `<target| rho_motion |target>`.
    pub f_exact: f64,
    /// `P(0^K_i)` per engineered mode.
    pub p0k: Vec<f64>,
    /// `|1 - Tr rho_motion|`.
    pub trace_deficit: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FidelityTrajectory {
    pub records: Vec<CycleRecord>,
}

impl FidelityTrajectory {
    /// First recorded cycle with exact fidelity at or above `threshold`.
    pub fn cycles_to(&self, threshold: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.f_exact >= threshold)
            .map(|r| r.cycle)
    }

    pub fn last(&self) -> Option<&CycleRecord> {
        self.records.last()
    }
}

#[derive(Clone, Debug)]
pub struct ReservoirRun {
    pub trajectory: FidelityTrajectory,
    /// Motional state after the last cycle.
    pub final_state: DensityOperator,
}

/// Coupling Hamiltonian of engineered mode `mode` for an arbitrary
/// two- or three-mode engineered basis, with spin 0 as the ancilla.
fn coupling_kron(layout: &HilbertLayout, spec: &SqueezeSpec, mode: usize, omega: f64) -> Result<KronOperator> {
    let k = squeeze::bogoliubov_kron(layout, spec, mode)?;
    squeeze::coupling_kron(&k, omega)
}

/// Precomputed pieces shared by every pulse of a run.
#[derive(Clone, Debug)]
pub struct ReservoirEngine {
    layout: HilbertLayout,
    config: CycleConfig,
    target: StateVector,
    squeeze: OperatorMatrix,
    hamiltonians: Vec<Mat<C64>>,
    /// `(A_0, A_1)` per mode for drift-free pulses.
    kraus: Vec<Option<(Mat<C64>, Mat<C64>)>>,
}

impl ReservoirEngine {
    /// `layout` is the motional layout (spins are ignored).
    pub fn new(layout: &HilbertLayout, config: &CycleConfig) -> Result<Self> {
        let motional = layout.motional();
        config.validate(&motional)?;
        let spec = config.squeeze_spec();
        let full = motional.with_spins(1)?;
        crate::fock::check_dense(&full)?;
        let target = squeeze::squeezed_vacuum(&motional, &spec)?;
        let squeeze = squeeze::squeeze_op(&motional, &spec)?;
        let mut hamiltonians = Vec::with_capacity(config.modes());
        let mut kraus = Vec::with_capacity(config.modes());
        for mode in 0..config.modes() {
            let h = coupling_kron(&full, &spec, mode, config.omega[mode])?.to_operator()?;
            let k = if config.drift_sigma == 0.0 {
                let eig = HermitianEigen::new(h.matrix())?;
                Some(kraus_pair(&eig, config.pulse_duration(mode), motional.dim()))
            } else {
                None
            };
            hamiltonians.push(h.into_matrix());
            kraus.push(k);
        }
        Ok(Self {
            layout: motional,
            config: config.clone(),
            target,
            squeeze,
            hamiltonians,
            kraus,
        })
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn target(&self) -> &StateVector {
        &self.target
    }

    /// One pulse followed by optical pumping, on the motional state.
    pub fn pulse_and_pump<R: Rng + ?Sized>(&self, rho: &DensityOperator, mode: usize, rng: &mut R) -> Result<DensityOperator> {
        self.layout.same_shape(rho.layout())?;
        let m = rho.matrix();
        let out = match &self.kraus[mode] {
            Some((a0, a1)) => apply_kraus(a0, a1, m),
            None => {
                let h = self.drifted_hamiltonian(mode, rng)?;
                let eig = HermitianEigen::new(h.as_ref())?;
                let (a0, a1) = kraus_pair(&eig, self.config.pulse_duration(mode), self.layout.dim());
                apply_kraus(&a0, &a1, m)
            }
        };
        DensityOperator::from_evolved(self.layout.clone(), out)
    }

    /// `H_i + sum_k Delta_k a_k^dag a_k` with fresh detunings.
    fn drifted_hamiltonian<R: Rng + ?Sized>(&self, mode: usize, rng: &mut R) -> Result<Mat<C64>> {
        let mut h = self.hamiltonians[mode].clone();
        if self.config.drift_sigma == 0.0 {
            return Ok(h);
        }
        let normal = Normal::new(0.0, self.config.drift_sigma)
            .map_err(|e| Error::InvalidArgument(format!("drift distribution: {e}")))?;
        let deltas: Vec<f64> = (0..self.layout.modes()).map(|_| normal.sample(rng)).collect();
        let m = self.layout.dim();
        for i in 0..2 * m {
            let occ = self.layout.occupations(i % m);
            let shift: f64 = occ.iter().zip(&deltas).map(|(&n, d)| n as f64 * d).sum();
            h[(i, i)] += linalg::real(shift);
        }
        Ok(h)
    }

    /// One full cycle over `mode_order`.
    pub fn cycle<R: Rng + ?Sized>(&self, rho: &DensityOperator, rng: &mut R) -> Result<DensityOperator> {
        let mut state = rho.clone();
        for &mode in &self.config.mode_order {
            state = self.pulse_and_pump(&state, mode, rng)?;
        }
        Ok(state)
    }

    pub fn record(&self, cycle: usize, rho: &DensityOperator) -> Result<CycleRecord> {
        let p0k = self.engineered_ground_populations(rho)?;
        Ok(CycleRecord {
            cycle,
            f_lower: p0k.iter().product(),
            f_exact: rho.fidelity_with_pure(&self.target)?,
            p0k,
            trace_deficit: (1.0 - rho.trace()).abs(),
        })
    }

    /// `S^dag rho S`: the motional state expressed in the engineered basis.
    pub fn engineered_frame(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        self.layout.same_shape(rho.layout())?;
        let rotated = self.squeeze.matrix().adjoint() * rho.matrix() * self.squeeze.matrix();
        DensityOperator::from_evolved(self.layout.clone(), rotated)
    }

    /// Marginal engineered-basis populations of every mode.
    pub fn engineered_populations(&self, rho: &DensityOperator) -> Result<Vec<Vec<f64>>> {
        let rotated = self.engineered_frame(rho)?;
        (0..self.layout.modes())
            .map(|k| rotated.mode_populations(k))
            .collect()
    }

    fn engineered_ground_populations(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        Ok(self
            .engineered_populations(rho)?
            .into_iter()
            .map(|p| p[0].clamp(0.0, 1.0))
            .collect())
    }

    pub fn run(&self, initial: &DensityOperator) -> Result<ReservoirRun> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        self.run_with_rng(initial, &mut rng)
    }

    pub fn run_with_rng<R: Rng + ?Sized>(&self, initial: &DensityOperator, rng: &mut R) -> Result<ReservoirRun> {
        let mut rho = motional_input(initial)?;
        self.layout.same_shape(rho.layout())?;
        let mut records = vec![self.record(0, &rho)?];
        for c in 1..=self.config.cycles {
            rho = self.cycle(&rho, rng)?;
            records.push(self.record(c, &rho)?);
        }
        Ok(ReservoirRun {
            trajectory: FidelityTrajectory { records },
            final_state: rho,
        })
    }
}

/// `A_0 = <down|U|down>`, `A_1 = <up|U|down>` with `U = exp(-i H t)`.
fn kraus_pair(eig: &HermitianEigen, t: f64, m: usize) -> (Mat<C64>, Mat<C64>) {
    let u = eig.map(|l| C64::cis(-l * t));
    let a0 = u.as_ref().submatrix(0, 0, m, m).to_owned();
    let a1 = u.as_ref().submatrix(m, 0, m, m).to_owned();
    (a0, a1)
}

fn apply_kraus(a0: &Mat<C64>, a1: &Mat<C64>, rho: faer::MatRef<'_, C64>) -> Mat<C64> {
    let first = a0 * rho * a0.adjoint();
    let second = a1 * rho * a1.adjoint();
    first + second
}

/// Accepts a motional state, or a one-spin state whose spin is down.
fn motional_input(initial: &DensityOperator) -> Result<DensityOperator> {
    match initial.layout().spins() {
        0 => Ok(initial.clone()),
        1 => {
            let m = initial.layout().motional_dim();
            let up: f64 = initial.populations()[m..].iter().sum();
            if up > 1e-12 {
                return Err(Error::SpinPreparation(format!(
                    "initial spin must be down; up population is {up:.3e}"
                )));
            }
            initial.partial_trace_spin()
        }
        n => Err(Error::InvalidArgument(format!(
            "reservoir uses one ancilla spin, layout has {n}"
        ))),
    }
}

/// Runs the pumping sequence from `initial` (motional, or with its spin down).
pub fn run_reservoir(initial: &DensityOperator, config: &CycleConfig) -> Result<ReservoirRun> {
    ReservoirEngine::new(initial.layout(), config)?.run(initial)
}

/// Independent drift trajectories; trajectory `i` draws from stream `i` of
/// the config seed, so results do not depend on the thread count.
pub fn run_ensemble(initial: &DensityOperator, config: &CycleConfig, trajectories: usize) -> Result<Vec<ReservoirRun>> {
    let engine = ReservoirEngine::new(initial.layout(), config)?;
    (0..trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(config.seed, i as u64);
            engine.run_with_rng(initial, &mut rng)
        })
        .collect()
}

pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One coherent pulse on the joint spin-motion state: `rho -> U rho U^dag`
/// with `U = exp(-i (H_i + sum_k Delta_k a_k^dag a_k) t)`.
pub fn pump_pulse<R: Rng + ?Sized>(rho: &DensityOperator, mode: usize, config: &CycleConfig, rng: &mut R) -> Result<DensityOperator> {
    let layout = rho.layout();
    if layout.spins() != 1 {
        return Err(Error::NoSpin);
    }
    config.validate(&layout.motional())?;
    layout.check_mode(mode)?;
    let spec = config.squeeze_spec();
    let mut h = coupling_kron(layout, &spec, mode, config.omega[mode])?;
    if config.drift_sigma > 0.0 {
        let normal = Normal::new(0.0, config.drift_sigma)
            .map_err(|e| Error::InvalidArgument(format!("drift distribution: {e}")))?;
        for k in 0..layout.modes() {
            let delta = normal.sample(rng);
            h = &h + &(&KronOperator::number(layout, k)? * delta);
        }
    }
    let h = h.to_operator()?;
    let u = crate::fock::Propagator::new(&h)?.unitary(config.pulse_duration(mode));
    conjugate(&u, rho)
}

/// Resets the spin: `rho -> |down><down| ⊗ Tr_spin(rho)`.
pub fn optical_pump(rho: &DensityOperator) -> Result<DensityOperator> {
    let spins = rho.layout().spins();
    rho.partial_trace_spin()?.with_spins_down(spins)
}

/// `P(n^K_i)`: population of `S |n>_i` in `rho`, read from `S^dag rho S`.
pub fn engineered_population(rho: &DensityOperator, r: f64, mode: usize, n: usize) -> Result<f64> {
    let motional = if rho.layout().spins() > 0 {
        rho.partial_trace_spin()?
    } else {
        rho.clone()
    };
    let layout = motional.layout().clone();
    layout.check_mode(mode)?;
    if n > layout.cutoff(mode) {
        return Err(Error::InvalidArgument(format!(
            "level {n} exceeds cutoff {}",
            layout.cutoff(mode)
        )));
    }
    let spec = SqueezeSpec {
        r,
        phi: 0.0,
        modes: (0..layout.modes()).collect(),
        policy: TruncationPolicy::Warn,
    };
    let s = squeeze::squeeze_op(&layout, &spec)?;
    let rotated = s.matrix().adjoint() * motional.matrix() * s.matrix();
    let rotated = DensityOperator::from_evolved(layout, rotated)?;
    Ok(rotated.mode_populations(mode)?[n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::thermal_state;

    fn small_config(r: f64) -> CycleConfig {
        CycleConfig::ideal(r, 1.0, 2, 3)
    }

    #[test]
    fn kraus_engine_matches_full_space_route() {
        let layout = HilbertLayout::new(2, 8, 1).unwrap();
        let mut config = small_config(0.3);
        config.truncation = TruncationPolicy::Warn;
        let rho = thermal_state(&layout, 0.2).unwrap();
        let engine = ReservoirEngine::new(&layout, &config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let via_engine = engine
            .pulse_and_pump(&rho.partial_trace_spin().unwrap(), 0, &mut rng)
            .unwrap();
        let full = pump_pulse(&rho, 0, &config, &mut rng).unwrap();
        let via_full = optical_pump(&full).unwrap().partial_trace_spin().unwrap();
        let diff = linalg::max_abs_diff(via_engine.matrix(), via_full.matrix());
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn resonant_transfer_at_zero_squeezing() {
        let layout = HilbertLayout::new(2, 3, 1).unwrap();
        let config = CycleConfig::ideal(0.0, 2.0, 2, 1);
        let psi = StateVector::fock(layout.clone(), &[1, 0]).unwrap();
        let rho = psi.to_density().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = pump_pulse(&rho, 0, &config, &mut rng).unwrap();
        let up00 = layout.motional_dim();
        assert!((out.matrix()[(up00, up00)].re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn optical_pump_is_idempotent() {
        let layout = HilbertLayout::new(2, 2, 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![linalg::ZERO; layout.dim()];
        amps[0] = linalg::real(s);
        amps[layout.motional_dim() + 1] = linalg::real(s);
        let rho = StateVector::new(layout, amps).unwrap().to_density().unwrap();
        let once = optical_pump(&rho).unwrap();
        let twice = optical_pump(&once).unwrap();
        assert!(linalg::max_abs_diff(once.matrix(), twice.matrix()) < 1e-15);
        assert!((once.trace() - 1.0).abs() < 1e-12);
        let before = rho.partial_trace_spin().unwrap().purity();
        assert!(before < 1.0 - 1e-3);
    }

    #[test]
    fn target_is_a_fixed_point() {
        let layout = HilbertLayout::new(2, 12, 0).unwrap();
        let mut config = small_config(0.5);
        config.cycles = 2;
        let engine = ReservoirEngine::new(&layout, &config).unwrap();
        let rho = engine.target().to_density().unwrap();
        let run = engine.run(&rho).unwrap();
        for rec in &run.trajectory.records {
            assert!(rec.f_exact > 1.0 - 1e-9);
            assert!(rec.f_lower > 1.0 - 1e-6, "{}", rec.f_lower);
        }
        assert!(run.final_state.trace_distance(&rho).unwrap() < 1e-6);
    }

    #[test]
    fn drift_runs_are_seed_reproducible() {
        let layout = HilbertLayout::new(2, 8, 0).unwrap();
        let mut config = small_config(0.2);
        config.drift_sigma = 0.3;
        config.seed = 7;
        let rho = thermal_state(&layout, 0.2).unwrap();
        let a = run_reservoir(&rho, &config).unwrap();
        let b = run_reservoir(&rho, &config).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        config.seed = 8;
        let c = run_reservoir(&rho, &config).unwrap();
        assert_ne!(a.trajectory, c.trajectory);
    }

    #[test]
    fn rejects_invalid_config() {
        let layout = HilbertLayout::new(2, 6, 0).unwrap();
        let mut config = small_config(0.2);
        config.omega[1] = 0.0;
        assert!(config.validate(&layout).is_err());
        let mut config = small_config(0.2);
        config.mode_order = vec![0, 5];
        assert!(config.validate(&layout).is_err());
    }
}
