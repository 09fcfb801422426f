//! Constrained nonlinear least squares for population extraction.
//!
//! Damped Gauss-Newton (Levenberg-Marquardt) with the analytic Jacobian of
//! the separable models. Populations are kept in the capped simplex
//! `{p >= 0, Σ p <= 1}` by Euclidean projection after every step, and `γ0`
//! (when floated) in `[0, ∞)`. A step is accepted only if it lowers the
//! residual, so the cost sequence of each start is monotone.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::sideband::model::{evaluate_table, factor_table, unravel, FlopCurve, ModelSpec};

pub const GRADIENT_TOL: f64 = 1e-8;
pub const STEP_TOL: f64 = 1e-10;
pub const MIN_STARTS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub spec: ModelSpec,
    /// Highest Fock index fitted on every axis.
    pub n_max: usize,
    /// Fit `γ0` alongside the populations, starting from `spec.gamma0`.
    #[serde(default)]
    pub float_gamma: bool,
    #[serde(default)]
    pub initial_guess: Option<Vec<f64>>,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    /// Seeds the perturbed starting points.
    #[serde(default)]
    pub seed: u64,
}

fn default_starts() -> usize {
    MIN_STARTS
}

fn default_iterations() -> usize {
    500
}

impl FitConfig {
    pub fn new(spec: ModelSpec, n_max: usize) -> Self {
        Self {
            spec,
            n_max,
            float_gamma: false,
            initial_guess: None,
            starts: MIN_STARTS,
            max_iterations: default_iterations(),
            seed: 0,
        }
    }

    pub fn floating_gamma(mut self, on: bool) -> Self {
        self.float_gamma = on;
        self
    }

    pub fn levels(&self) -> usize {
        self.n_max + 1
    }

    pub fn population_count(&self) -> usize {
        self.levels().pow(self.spec.model.dimensionality() as u32)
    }

    pub fn parameter_count(&self) -> usize {
        self.population_count() + usize::from(self.float_gamma)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationEstimate {
    /// Row-major over `(n_max + 1)^d` Fock labels.
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub gamma0: f64,
    /// Zero when `γ0` was held fixed.
    pub gamma0_std_error: f64,
    /// `‖model - data‖₂` at the returned point.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl PopulationEstimate {
    /// Value at a multi-index label.
    pub fn get(&self, label: &[usize], levels: usize) -> f64 {
        let idx = label.iter().fold(0, |acc, &n| acc * levels + n);
        self.values[idx]
    }
}

/// Euclidean projection onto `{x >= 0, Σ x <= 1}`.
pub fn project_capped_simplex(x: &mut [f64]) {
    let clipped: f64 = x.iter().map(|v| v.max(0.0)).sum();
    if clipped <= 1.0 {
        for v in x.iter_mut() {
            *v = v.max(0.0);
        }
        return;
    }
    let mut sorted: Vec<f64> = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cum += u;
        let candidate = (cum - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    for v in x.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}

struct Problem<'a> {
    config: &'a FitConfig,
    curve: &'a FlopCurve,
    pops: usize,
}

impl Problem<'_> {
    fn split<'b>(&self, theta: &'b [f64]) -> (&'b [f64], f64) {
        let g = if self.config.float_gamma {
            theta[self.pops]
        } else {
            self.config.spec.gamma0
        };
        (&theta[..self.pops], g)
    }

    fn project(&self, theta: &mut [f64]) {
        project_capped_simplex(&mut theta[..self.pops]);
        if self.config.float_gamma {
            theta[self.pops] = theta[self.pops].max(0.0);
        }
    }

    fn residual(&self, theta: &[f64]) -> Vec<f64> {
        let (p, g) = self.split(theta);
        let table = factor_table(&self.config.spec, &self.curve.axes, self.config.levels(), g);
        let model = evaluate_table(self.config.spec.prefactor(), p, &self.curve.axes, self.config.levels(), &table);
        model.iter().zip(&self.curve.p_down).map(|(m, y)| m - y).collect()
    }

    fn jacobian(&self, theta: &[f64]) -> Mat<f64> {
        let (p, g) = self.split(theta);
        let levels = self.config.levels();
        let axes = &self.curve.axes;
        let table = factor_table(&self.config.spec, axes, levels, g);
        let pref = self.config.spec.prefactor();
        let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
        let pshape = vec![levels; axes.len()];
        let labels: Vec<Vec<usize>> = (0..self.pops).map(|j| unravel(j, &pshape)).collect();
        let m = self.curve.len();
        let mut jac = Mat::<f64>::zeros(m, theta.len());
        for i in 0..m {
            let ti = unravel(i, &shape);
            let mut dg = 0.0;
            for (j, nj) in labels.iter().enumerate() {
                let mut prod = pref;
                for k in 0..axes.len() {
                    prod *= table.phi[k][nj[k]][ti[k]];
                }
                jac[(i, j)] = prod;
                if self.config.float_gamma && p[j] != 0.0 {
                    for k in 0..axes.len() {
                        let mut term = pref * p[j] * table.dphi[k][nj[k]][ti[k]];
                        for (q, &n) in nj.iter().enumerate() {
                            if q != k {
                                term *= table.phi[q][n][ti[q]];
                            }
                        }
                        dg += term;
                    }
                }
            }
            if self.config.float_gamma {
                jac[(i, self.pops)] = dg;
            }
        }
        jac
    }
}

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn gradient(jac: &Mat<f64>, r: &[f64]) -> Vec<f64> {
    (0..jac.ncols())
        .map(|c| (0..jac.nrows()).map(|i| jac[(i, c)] * r[i]).sum())
        .collect()
}

struct StartResult {
    theta: Vec<f64>,
    cost: f64,
    converged: bool,
    iterations: usize,
}

fn levenberg_marquardt(problem: &Problem<'_>, mut theta: Vec<f64>) -> StartResult {
    problem.project(&mut theta);
    let mut r = problem.residual(&theta);
    let mut c = cost(&r);
    let mut lambda = -1.0;
    let max_iter = problem.config.max_iterations;
    for iter in 0..max_iter {
        let jac = problem.jacobian(&theta);
        let g = gradient(&jac, &r);
        let mut probe: Vec<f64> = theta.iter().zip(&g).map(|(t, gi)| t - gi).collect();
        problem.project(&mut probe);
        let pg = probe.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if pg <= GRADIENT_TOL {
            return StartResult { theta, cost: c, converged: true, iterations: iter };
        }
        let jtj = jac.transpose() * &jac;
        let n = theta.len();
        if lambda < 0.0 {
            lambda = 1e-3 * (0..n).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-12);
        }
        let pops = problem.pops;
        let on_face = theta[..pops].iter().sum::<f64>() >= 1.0 - 1e-12;
        // Multiplier of Σ p <= 1, estimated from the interior populations.
        let mu = if on_face {
            let inner: Vec<f64> = (0..pops).filter(|&i| theta[i] > 0.0).map(|i| g[i]).collect();
            (-inner.iter().sum::<f64>() / inner.len().max(1) as f64).max(0.0)
        } else {
            0.0
        };
        // Coordinates held at zero by the KKT conditions stay fixed this step.
        let idx: Vec<usize> = (0..n)
            .filter(|&i| {
                let shift = if i < pops { mu } else { 0.0 };
                !(theta[i] <= 0.0 && g[i] + shift >= 0.0)
            })
            .collect();
        loop {
            let k = idx.len();
            let mut a = Mat::<f64>::zeros(k, k);
            let mut b = vec![0.0; k];
            for (ri, &i) in idx.iter().enumerate() {
                for (ci, &j) in idx.iter().enumerate() {
                    a[(ri, ci)] = jtj[(i, j)];
                }
                a[(ri, ri)] += lambda * jtj[(i, i)].max(1e-12);
                b[ri] = -g[i];
            }
            let fallback = |b: &[f64]| b.iter().map(|v| v / lambda).collect::<Vec<f64>>();
            let mut step = linalg::solve_real(&a, &b).unwrap_or_else(|_| fallback(&b));
            let outward: f64 = idx.iter().zip(&step).filter(|(&i, _)| i < pops).map(|(_, s)| s).sum();
            if on_face && outward > 0.0 {
                // Stay on the face Σ p = 1: solve the bordered system.
                let mut kkt = Mat::<f64>::zeros(k + 1, k + 1);
                for r in 0..k {
                    for c in 0..k {
                        kkt[(r, c)] = a[(r, c)];
                    }
                    if idx[r] < pops {
                        kkt[(r, k)] = 1.0;
                        kkt[(k, r)] = 1.0;
                    }
                }
                let mut rhs = b.clone();
                rhs.push(0.0);
                if let Ok(sol) = linalg::solve_real(&kkt, &rhs) {
                    step = sol[..k].to_vec();
                }
            }
            let mut trial = theta.clone();
            for (ri, &i) in idx.iter().enumerate() {
                trial[i] += step[ri];
            }
            problem.project(&mut trial);
            let rt = problem.residual(&trial);
            let ct = cost(&rt);
            if ct < c {
                let moved = trial.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                theta = trial;
                r = rt;
                c = ct;
                lambda = (lambda / 3.0).max(1e-15);
                if moved <= STEP_TOL {
                    return StartResult { theta, cost: c, converged: true, iterations: iter + 1 };
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e20 {
                // No descent is possible from here: a stationary point up to rounding.
                return StartResult { theta, cost: c, converged: pg <= 1e-6, iterations: iter + 1 };
            }
        }
    }
    StartResult {
        theta,
        cost: c,
        converged: false,
        iterations: max_iter,
    }
}

fn starting_points(config: &FitConfig) -> Result<Vec<Vec<f64>>> {
    let pops = config.population_count();
    let base: Vec<f64> = match &config.initial_guess {
        Some(g) if g.len() == pops => g.clone(),
        Some(g) => {
            return Err(Error::DimensionMismatch {
                expected: pops,
                found: g.len(),
            })
        }
        None => vec![1.0 / pops as f64; pops],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let starts = config.starts.max(MIN_STARTS);
    let mut out = Vec::with_capacity(starts);
    for s in 0..starts {
        let mut theta = if s == 0 {
            base.clone()
        } else {
            let draw: Vec<f64> = (0..pops).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let total: f64 = draw.iter().sum();
            base.iter().zip(&draw).map(|(b, d)| 0.5 * b + 0.5 * d / total).collect()
        };
        if config.float_gamma {
            let jitter = if s == 0 { 1.0 } else { rng.random_range(0.5..1.5) };
            theta.push(config.spec.gamma0 * jitter);
        }
        out.push(theta);
    }
    Ok(out)
}

/// Point variances: binomial `P(1-P)/shots` at the fitted curve when the
/// shot count is known, else the pooled `RSS / (points - parameters)`.
fn point_variances(problem: &Problem<'_>, best: &StartResult) -> Vec<f64> {
    let r = problem.residual(&best.theta);
    match problem.curve.repetitions {
        Some(reps) => r
            .iter()
            .zip(&problem.curve.p_down)
            .map(|(ri, y)| {
                let p = (y + ri).clamp(0.0, 1.0);
                p * (1.0 - p) / reps as f64
            })
            .collect(),
        None => {
            let s2 = 2.0 * best.cost / (problem.curve.len() - best.theta.len()) as f64;
            vec![s2; r.len()]
        }
    }
}

/// Sandwich covariance `G M G` with `M = Jᵀ diag(σ²) J` and `G` the inverse
/// of `JᵀJ` restricted to `coords`, projected onto `Σ p = 1` when `face`.
fn sandwich(jac: &Mat<f64>, var: &[f64], coords: &[usize], pops: usize, face: bool) -> Result<Vec<f64>> {
    let k = coords.len();
    let m = jac.nrows();
    let jf = Mat::<f64>::from_fn(m, k, |i, c| jac[(i, coords[c])]);
    let h = jf.transpose() * &jf;
    let mut g = linalg::pseudo_inverse_symmetric(&h, 1e-12)?;
    if face {
        let ones: Vec<f64> = coords.iter().map(|&i| if i < pops { 1.0 } else { 0.0 }).collect();
        let g1: Vec<f64> = (0..k).map(|r| (0..k).map(|c| g[(r, c)] * ones[c]).sum()).collect();
        let denom: f64 = g1.iter().zip(&ones).map(|(a, b)| a * b).sum();
        if denom > 0.0 {
            g = Mat::<f64>::from_fn(k, k, |r, c| g[(r, c)] - g1[r] * g1[c] / denom);
        }
    }
    let wj = Mat::<f64>::from_fn(m, k, |i, c| var[i] * jf[(i, c)]);
    let meat = jf.transpose() * &wj;
    let cov = &g * &meat * &g;
    Ok((0..k).map(|r| cov[(r, r)].max(0.0).sqrt()).collect())
}

/// Standard errors on the feasible manifold at the optimum. Coordinates
/// resting on `p = 0` report their unconstrained error.
fn standard_errors(problem: &Problem<'_>, best: &StartResult) -> Result<Vec<f64>> {
    let theta = &best.theta;
    let k = theta.len();
    let pops = problem.pops;
    let jac = problem.jacobian(theta);
    let var = point_variances(problem, best);
    let all: Vec<usize> = (0..k).collect();
    let mut se = sandwich(&jac, &var, &all, pops, false)?;
    let free: Vec<usize> = (0..k).filter(|&i| i >= pops || theta[i] > 1e-12).collect();
    let face = theta[..pops].iter().sum::<f64>() >= 1.0 - 1e-9;
    for (e, &i) in sandwich(&jac, &var, &free, pops, face)?.iter().zip(&free) {
        se[i] = *e;
    }
    Ok(se)
}

/// Best of several projected Levenberg-Marquardt runs, keeping the lowest
/// residual.
pub fn fit_populations(curve: &FlopCurve, config: &FitConfig) -> Result<PopulationEstimate> {
    curve.validate()?;
    config.spec.validate()?;
    let d = config.spec.model.dimensionality();
    if curve.dimensionality() != d {
        return Err(Error::InvalidArgument(format!(
            "curve has {} axes, model needs {d}",
            curve.dimensionality()
        )));
    }
    let k = config.parameter_count();
    if curve.len() <= k {
        return Err(Error::DegenerateGrid {
            points: curve.len(),
            parameters: k,
        });
    }
    let problem = Problem {
        config,
        curve,
        pops: config.population_count(),
    };
    let results: Vec<StartResult> = starting_points(config)?
        .into_par_iter()
        .map(|theta| levenberg_marquardt(&problem, theta))
        .collect();
    let best = results
        .into_iter()
        .reduce(|a, b| if b.cost < a.cost { b } else { a })
        .expect("at least one start");

    let se = standard_errors(&problem, &best)?;
    let pops = problem.pops;
    let (values, gamma0) = {
        let (p, g) = problem.split(&best.theta);
        (p.to_vec(), g)
    };
    Ok(PopulationEstimate {
        values,
        std_errors: se[..pops].to_vec(),
        gamma0,
        gamma0_std_error: if config.float_gamma { se[pops] } else { 0.0 },
        residual_norm: (2.0 * best.cost).sqrt(),
        converged: best.converged,
        iterations: best.iterations,
    })
}
