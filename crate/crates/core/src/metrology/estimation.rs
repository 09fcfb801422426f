//! Monte-Carlo joint measurement of `X+` and `P-` on the encoded squeezed
//! state, sampled from the closed-form outcome density.
//!
//! Sign convention: the outcome `(chi, eta)` is centred at `(-Ω+ t, -Ω- t)`
//! and the estimators are `Ω̂+ = -chi/t`, `Ω̂- = -eta/t`. Both are unbiased,
//! which is consistent with `<X+> = Ω+ t` and `<P-> = -Ω- t` on the state.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrology::encode::DisplacementParams;
use crate::metrology::qfi::{analytic_enhancement_db, classical_variance, variance_analytic};
use crate::reservoir::trajectory_rng;

/// Samples drawn per RNG stream. Fixed so results do not depend on the
/// number of worker threads.
pub const BLOCK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationRecord {
    pub r: f64,
    pub params: DisplacementParams,
    pub trials: usize,
    /// Joint measurements averaged into one estimate.
    pub batch_size: usize,
    /// `(Ω̂+, Ω̂-)` per trial.
    pub estimates: Vec<[f64; 2]>,
    pub mean_estimate: [f64; 2],
    /// Unbiased sample variance of the estimates.
    pub empirical_variance: [f64; 2],
    pub analytic_variance: [f64; 2],
    pub classical_variance: f64,
    /// `10 log10(classical / empirical)`.
    pub enhancement_db: [f64; 2],
    pub analytic_enhancement_db: f64,
}

/// `p(chi, eta) = exp(2r - e^{2r}((chi + Ω+ t)^2 + (eta + Ω- t)^2)) / pi`.
pub fn joint_pdf(r: f64, params: &DisplacementParams, chi: f64, eta: f64) -> f64 {
    let dx = chi + params.omega_plus * params.t;
    let dy = eta + params.omega_minus * params.t;
    (2.0 * r - (2.0 * r).exp() * (dx * dx + dy * dy)).exp() / std::f64::consts::PI
}

/// `n` outcome pairs drawn from [`joint_pdf`]; block `b` uses stream
/// `(stream << 32) | b` of `seed`.
pub fn sample_outcomes(r: f64, params: &DisplacementParams, n: usize, seed: u64, stream: u64) -> Result<Vec<[f64; 2]>> {
    params.validate()?;
    if !r.is_finite() {
        return Err(Error::InvalidArgument("r must be finite".into()));
    }
    let sd = ((-2.0 * r).exp() / 2.0).sqrt();
    let chi = Normal::new(-params.omega_plus * params.t, sd)
        .map_err(|e| Error::InvalidArgument(format!("outcome distribution: {e}")))?;
    let eta = Normal::new(-params.omega_minus * params.t, sd)
        .map_err(|e| Error::InvalidArgument(format!("outcome distribution: {e}")))?;
    let blocks = n.div_ceil(BLOCK);
    let chunks: Vec<Vec<[f64; 2]>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng: ChaCha8Rng = trajectory_rng(seed, (stream << 32) | b as u64);
            let len = BLOCK.min(n - b * BLOCK);
            (0..len)
                .map(|_| [chi.sample(&mut rng), eta.sample(&mut rng)])
                .collect()
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// One estimate per joint measurement.
pub fn sample_joint_measurement(r: f64, params: &DisplacementParams, trials: usize, seed: u64) -> Result<EstimationRecord> {
    sample_joint_measurement_batched(r, params, trials, 1, seed, 0)
}

pub fn sample_joint_measurement_batched(
    r: f64,
    params: &DisplacementParams,
    trials: usize,
    batch_size: usize,
    seed: u64,
    stream: u64,
) -> Result<EstimationRecord> {
    if trials < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 trials, got {trials}")));
    }
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be >= 1".into()));
    }
    let t = params.t;
    let analytic = variance_analytic(r, t)? / batch_size as f64;
    let classical = classical_variance(t)? / batch_size as f64;
    let outcomes = sample_outcomes(r, params, trials * batch_size, seed, stream)?;
    let estimates: Vec<[f64; 2]> = outcomes
        .chunks(batch_size)
        .map(|batch| {
            let k = batch.len() as f64;
            let chi: f64 = batch.iter().map(|o| o[0]).sum::<f64>() / k;
            let eta: f64 = batch.iter().map(|o| o[1]).sum::<f64>() / k;
            [-chi / t, -eta / t]
        })
        .collect();
    let mut mean = [0.0; 2];
    let mut var = [0.0; 2];
    for p in 0..2 {
        let xs: Vec<f64> = estimates.iter().map(|e| e[p]).collect();
        let (m, v) = mean_and_variance(&xs);
        mean[p] = m;
        var[p] = v;
    }
    Ok(EstimationRecord {
        r,
        params: *params,
        trials,
        batch_size,
        estimates,
        mean_estimate: mean,
        empirical_variance: var,
        analytic_variance: [analytic; 2],
        classical_variance: classical,
        enhancement_db: [db(classical / var[0]), db(classical / var[1])],
        analytic_enhancement_db: analytic_enhancement_db(r),
    })
}

fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Mean and unbiased variance.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t: f64,
    pub var_plus: f64,
    pub var_minus: f64,
    pub var_analytic: f64,
    pub db_plus: f64,
    pub db_minus: f64,
}

/// Estimation variance over a grid of interrogation times; point `i` uses
/// stream `i` of `seed`.
pub fn variance_sweep(
    r: f64,
    omega_plus: f64,
    omega_minus: f64,
    t_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let params = DisplacementParams::new(omega_plus, omega_minus, t)?;
            let rec = sample_joint_measurement_batched(r, &params, trials, 1, seed, i as u64)?;
            Ok(SweepPoint {
                t,
                var_plus: rec.empirical_variance[0],
                var_minus: rec.empirical_variance[1],
                var_analytic: rec.analytic_variance[0],
                db_plus: rec.enhancement_db[0],
                db_minus: rec.enhancement_db[1],
            })
        })
        .collect()
}

/// Enhancement of a sweep: the mean per-point dB for `(Ω+, Ω-)`.
pub fn sweep_enhancement_db(points: &[SweepPoint]) -> [f64; 2] {
    let n = points.len() as f64;
    [
        points.iter().map(|p| p.db_plus).sum::<f64>() / n,
        points.iter().map(|p| p.db_minus).sum::<f64>() / n,
    ]
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Log-spaced grid of `n` points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
