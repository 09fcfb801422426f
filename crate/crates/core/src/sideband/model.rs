//! Forward models for blue-sideband flopping curves.
//!
//! Every model is separable: `P(t_1..t_d) = c Σ p(n_1..n_d) Π_k φ(n_k, t_k)`
//! with populations stored row-major (first axis most significant).
//! Rabi rates follow `Ω_n = Ω √(n+1)` and dephasing `γ_n = γ0 (n+1)^p`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// One spin, one mode: `½ Σ p(n) (1 + e^{-γ_n t} cos Ω_n t)`.
    Single,
    /// Two sequential pulses on two modes, product of single-mode brackets.
    Fock2d,
    /// Two spins on one mode: `Σ p(n) e^{-γ_n t} cos²(W_n t / 2)`,
    /// `W_n² = Ω_n² + Ω_{n+1}²`.
    TwoIon,
    /// Three sequential pulses, product of two-spin factors.
    ThreeMode,
}

impl Model {
    pub fn dimensionality(self) -> usize {
        match self {
            Model::Single | Model::TwoIon => 1,
            Model::Fock2d => 2,
            Model::ThreeMode => 3,
        }
    }
}

/// Physical parameters shared by synthesis and fitting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: Model,
    /// Base Rabi rate per axis in rad/s; a single entry applies to every axis.
    pub rabi: Vec<f64>,
    /// 1/s
    #[serde(default)]
    pub gamma0: f64,
    #[serde(default = "default_exponent")]
    pub gamma_exponent: f64,
    /// Unnormalized variant: prefactor ½ for the 2-D
    /// model and the `1/W_n⁴` weights of the two-spin factors. Such curves
    /// are not probabilities.
    #[serde(default)]
    pub unnormalized: bool,
}

fn default_exponent() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn new(model: Model, rabi: f64) -> Self {
        Self {
            model,
            rabi: vec![rabi],
            gamma0: 0.0,
            gamma_exponent: 1.0,
            unnormalized: false,
        }
    }

    pub fn with_gamma(mut self, gamma0: f64) -> Self {
        self.gamma0 = gamma0;
        self
    }

    pub fn unnormalized(mut self, on: bool) -> Self {
        self.unnormalized = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.model.dimensionality();
        if self.rabi.len() != 1 && self.rabi.len() != d {
            return Err(Error::InvalidArgument(format!(
                "{} Rabi rates given for a {d}-axis model",
                self.rabi.len()
            )));
        }
        if self.rabi.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument("Rabi rates must be finite and > 0".into()));
        }
        if !(self.gamma0.is_finite() && self.gamma0 >= 0.0) || !self.gamma_exponent.is_finite() {
            return Err(Error::InvalidArgument("dephasing law must be finite with gamma0 >= 0".into()));
        }
        Ok(())
    }

    pub fn rabi_for_axis(&self, axis: usize) -> f64 {
        if self.rabi.len() == 1 {
            self.rabi[0]
        } else {
            self.rabi[axis]
        }
    }

    pub fn prefactor(&self) -> f64 {
        match self.model {
            Model::Single => 0.5,
            Model::Fock2d if self.unnormalized => 0.5,
            Model::Fock2d => 0.25,
            Model::TwoIon | Model::ThreeMode => 1.0,
        }
    }

    /// `(φ, ∂φ/∂γ0)` for level `n` at pulse time `t` on `axis`.
    pub fn factor(&self, axis: usize, n: usize, t: f64, gamma0: f64) -> (f64, f64) {
        let omega = self.rabi_for_axis(axis);
        let w = ((n + 1) as f64).powf(self.gamma_exponent);
        let decay = (-gamma0 * w * t).exp();
        match self.model {
            Model::Single | Model::Fock2d => {
                let c = (omega * ((n + 1) as f64).sqrt() * t).cos();
                (1.0 + decay * c, -w * t * decay * c)
            }
            Model::TwoIon | Model::ThreeMode => {
                let w2 = omega * omega * (2 * n + 3) as f64;
                let c = (0.5 * w2.sqrt() * t).cos();
                let mut v = decay * c * c;
                if self.unnormalized {
                    v /= w2 * w2;
                }
                (v, -w * t * v)
            }
        }
    }
}

/// Pulse-time grids per axis and the spin-down probability at each point of
/// their product, last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlopCurve {
    pub axes: Vec<Vec<f64>>,
    pub p_down: Vec<f64>,
    /// Shots per point; `None` for an exact model curve.
    pub repetitions: Option<u32>,
}

impl FlopCurve {
    pub fn dimensionality(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.p_down.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_down.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        check_axes(&self.axes)?;
        let n: usize = self.axes.iter().map(Vec::len).product();
        if n != self.p_down.len() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.p_down.len(),
            });
        }
        if self.p_down.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("p_down outside [0, 1]".into()));
        }
        Ok(())
    }

    /// Pulse times of point `i`, one per axis.
    pub fn point(&self, i: usize) -> Vec<f64> {
        let idx = unravel(i, &self.axes.iter().map(Vec::len).collect::<Vec<_>>());
        idx.iter().zip(&self.axes).map(|(&k, a)| a[k]).collect()
    }
}

fn check_axes(axes: &[Vec<f64>]) -> Result<()> {
    if axes.is_empty() {
        return Err(Error::InvalidArgument("a curve needs at least one time axis".into()));
    }
    for a in axes {
        if a.is_empty() {
            return Err(Error::InvalidArgument("empty time axis".into()));
        }
        if a.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidArgument("pulse durations must be finite and >= 0".into()));
        }
        if a.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("time axis must be strictly increasing".into()));
        }
    }
    Ok(())
}

/// Row-major multi-index of flat index `i`.
pub fn unravel(mut i: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        out[k] = i % shape[k];
        i /= shape[k];
    }
    out
}

/// Number of levels per axis for a population table of length `len`.
pub fn levels_for(len: usize, dims: usize) -> Result<usize> {
    let guess = (len as f64).powf(1.0 / dims as f64).round() as usize;
    if guess == 0 || guess.pow(dims as u32) != len {
        return Err(Error::DimensionMismatch {
            expected: guess.max(1).pow(dims as u32),
            found: len,
        });
    }
    Ok(guess)
}

/// Per-axis factor tables: `phi[k][n][i]` and `dphi[k][n][i]`.
pub(crate) struct FactorTable {
    pub phi: Vec<Vec<Vec<f64>>>,
    pub dphi: Vec<Vec<Vec<f64>>>,
}

pub(crate) fn factor_table(spec: &ModelSpec, axes: &[Vec<f64>], levels: usize, gamma0: f64) -> FactorTable {
    let mut phi = Vec::with_capacity(axes.len());
    let mut dphi = Vec::with_capacity(axes.len());
    for (k, grid) in axes.iter().enumerate() {
        let (p, d): (Vec<Vec<f64>>, Vec<Vec<f64>>) = (0..levels)
            .map(|n| grid.iter().map(|&t| spec.factor(k, n, t, gamma0)).unzip())
            .unzip();
        phi.push(p);
        dphi.push(d);
    }
    FactorTable { phi, dphi }
}

/// Model curve on the product of `axes`.
pub fn evaluate(spec: &ModelSpec, populations: &[f64], axes: &[Vec<f64>]) -> Result<Vec<f64>> {
    spec.validate()?;
    check_axes(axes)?;
    let d = spec.model.dimensionality();
    if axes.len() != d {
        return Err(Error::InvalidArgument(format!(
            "model needs {d} time axes, got {}",
            axes.len()
        )));
    }
    let levels = levels_for(populations.len(), d)?;
    let table = factor_table(spec, axes, levels, spec.gamma0);
    Ok(evaluate_table(spec.prefactor(), populations, axes, levels, &table))
}

pub(crate) fn evaluate_table(
    prefactor: f64,
    populations: &[f64],
    axes: &[Vec<f64>],
    levels: usize,
    table: &FactorTable,
) -> Vec<f64> {
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let pshape = vec![levels; axes.len()];
    let points: usize = shape.iter().product();
    (0..points)
        .map(|i| {
            let ti = unravel(i, &shape);
            let mut acc = 0.0;
            for (j, &p) in populations.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let nj = unravel(j, &pshape);
                let mut prod = p;
                for k in 0..axes.len() {
                    prod *= table.phi[k][nj[k]][ti[k]];
                }
                acc += prod;
            }
            prefactor * acc
        })
        .collect()
}

/// Single-mode curve at one time.
pub fn model_single(spec: &ModelSpec, populations: &[f64], t: f64) -> Result<f64> {
    point_eval(spec, Model::Single, populations, &[t])
}

pub fn model_fock2d(spec: &ModelSpec, populations: &[f64], t1: f64, t2: f64) -> Result<f64> {
    point_eval(spec, Model::Fock2d, populations, &[t1, t2])
}

pub fn model_two_ion(spec: &ModelSpec, populations: &[f64], t: f64) -> Result<f64> {
    point_eval(spec, Model::TwoIon, populations, &[t])
}

pub fn model_three(spec: &ModelSpec, populations: &[f64], t1: f64, t2: f64, t3: f64) -> Result<f64> {
    point_eval(spec, Model::ThreeMode, populations, &[t1, t2, t3])
}

fn point_eval(spec: &ModelSpec, model: Model, populations: &[f64], t: &[f64]) -> Result<f64> {
    if spec.model != model {
        return Err(Error::InvalidArgument(format!(
            "spec selects {:?}, evaluator is {model:?}",
            spec.model
        )));
    }
    let axes: Vec<Vec<f64>> = t.iter().map(|&v| vec![v]).collect();
    Ok(evaluate(spec, populations, &axes)?[0])
}

/// Model curve with optional binomial shot noise. The RNG is ChaCha8 seeded
/// with `seed`, one draw per point in order.
pub fn synthesize_curve(
    spec: &ModelSpec,
    populations: &[f64],
    axes: Vec<Vec<f64>>,
    repetitions: Option<u32>,
    seed: u64,
) -> Result<FlopCurve> {
    let exact = evaluate(spec, populations, &axes)?;
    let p_down = match repetitions {
        None => exact,
        Some(0) => return Err(Error::InvalidArgument("repetitions must be >= 1".into())),
        Some(reps) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            exact
                .iter()
                .map(|&p| {
                    if !(-1e-12..=1.0 + 1e-12).contains(&p) {
                        return Err(Error::InvalidArgument(format!(
                            "model value {p} is not a probability; shot noise needs normalized mode"
                        )));
                    }
                    let b = Binomial::new(reps as u64, p.clamp(0.0, 1.0))
                        .map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?;
                    Ok(b.sample(&mut rng) as f64 / reps as f64)
                })
                .collect::<Result<Vec<f64>>>()?
        }
    };
    Ok(FlopCurve {
        axes,
        p_down,
        repetitions,
    })
}

/// Evenly spaced grid of `n` points on `[0, t_max]`.
pub fn linear_grid(t_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const W: f64 = 2.0 * PI * 6.8e3;

    #[test]
    fn single_mode_reductions() {
        let spec = ModelSpec::new(Model::Single, W);
        for t in [0.0, 1e-5, 7e-5] {
            let p = model_single(&spec, &[1.0], t).unwrap();
            assert!((p - 0.5 * (1.0 + (W * t).cos())).abs() < 1e-15);
        }
        let k1 = [0.91, 0.03, 0.03, 0.01, 0.02];
        assert!((model_single(&spec, &k1, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let t = PI / W;
        let oracle: f64 = k1
            .iter()
            .enumerate()
            .map(|(n, p)| 0.5 * p * (1.0 + (((n + 1) as f64).sqrt() * PI).cos()))
            .sum();
        assert!((model_single(&spec, &k1, t).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn fock2d_normalization_and_swap() {
        let norm = ModelSpec::new(Model::Fock2d, W);
        let lit = norm.clone().unnormalized(true);
        let p = [0.4, 0.1, 0.2, 0.3];
        assert!((model_fock2d(&norm, &p, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((model_fock2d(&lit, &p, 0.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        let swapped = [0.4, 0.2, 0.1, 0.3];
        let a = model_fock2d(&norm, &p, 3e-5, 8e-5).unwrap();
        let b = model_fock2d(&norm, &swapped, 8e-5, 3e-5).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn two_ion_modes() {
        let spec = ModelSpec::new(Model::TwoIon, W).with_gamma(300.0);
        let t = 4e-5;
        let expected = (0.5 * (3.0f64).sqrt() * W * t).cos().powi(2) * (-300.0 * t).exp();
        assert!((model_two_ion(&spec, &[1.0, 0.0], t).unwrap() - expected).abs() < 1e-15);
        let lit = ModelSpec::new(Model::TwoIon, W).unnormalized(true);
        let p = [0.7, 0.3];
        let oracle = 0.7 / (3.0 * W * W).powi(2) + 0.3 / (5.0 * W * W).powi(2);
        assert!((model_two_ion(&lit, &p, 0.0).unwrap() - oracle).abs() < 1e-12 * oracle);
    }

    #[test]
    fn synthesis_is_seeded_and_bounded() {
        let spec = ModelSpec::new(Model::Single, W);
        let axes = vec![linear_grid(2e-4, 40)];
        let p = [0.8, 0.2];
        let a = synthesize_curve(&spec, &p, axes.clone(), Some(200), 5).unwrap();
        let b = synthesize_curve(&spec, &p, axes.clone(), Some(200), 5).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        let exact = synthesize_curve(&spec, &p, axes.clone(), None, 5).unwrap();
        assert_eq!(exact.p_down, evaluate(&spec, &p, &axes).unwrap());
        assert!(synthesize_curve(&spec, &p, axes, Some(0), 5).is_err());
    }

    #[test]
    fn unravel_row_major() {
        assert_eq!(unravel(7, &[2, 2, 2]), vec![1, 1, 1]);
        assert_eq!(unravel(5, &[3, 2]), vec![2, 1]);
        assert_eq!(levels_for(125, 3).unwrap(), 5);
        assert!(levels_for(10, 2).is_err());
    }
}
