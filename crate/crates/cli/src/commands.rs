//! One function per subcommand. Each returns its payload, tables and
//! warnings; nothing touches the filesystem here except reading inputs.

use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::{json, Value};

use squeezelab::fock::thermal_state;
use squeezelab::metrology::{self, duan_epr, EPRReport};
use squeezelab::reservoir::{trajectory_rng, CycleConfig, ReservoirEngine, ReservoirRun};
use squeezelab::sideband::{self, FitConfig, FlopCurve, ModelSpec, PopulationEstimate};
use squeezelab::squeeze::{self, SqueezeSpec, TruncationPolicy};
use squeezelab::{DensityOperator, HilbertLayout, QuantumState, StateVector};

use crate::config::{CurveSource, ExperimentConfig, PopulationBasis};
use crate::curves;
use crate::error::CliError;
use crate::output::{num, Table};

/// Top-level Fock population above which a run is rejected.
pub const TRUNCATION_ERROR: f64 = 1e-4;
/// Top-level Fock population above which a run carries a warning.
pub const TRUNCATION_WARNING: f64 = 1e-6;

#[derive(Debug, Default)]
pub struct Outcome {
    pub payload: Value,
    pub tables: Vec<(String, Table)>,
    /// Additional JSON documents, by file name.
    pub documents: Vec<(String, Value)>,
    pub warnings: Vec<String>,
    /// Reported after the outputs are written.
    pub failure: Option<CliError>,
}

/// Independent per-item seeds from one base seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn omegas(cfg: &ExperimentConfig, modes: usize) -> Result<Vec<f64>, CliError> {
    let w: Vec<f64> = cfg.reservoir.omega.iter().map(|r| r.0).collect();
    if w.len() == modes {
        Ok(w)
    } else if w.windows(2).all(|p| p[0] == p[1]) {
        Ok(vec![w[0]; modes])
    } else {
        Err(CliError::Config(format!(
            "reservoir.omega has {} distinct entries; this command needs {modes}",
            w.len()
        )))
    }
}

fn cycle_config(
    cfg: &ExperimentConfig,
    r: f64,
    modes: usize,
    cycles: usize,
    truncation: TruncationPolicy,
) -> Result<CycleConfig, CliError> {
    Ok(CycleConfig {
        r,
        omega: omegas(cfg, modes)?,
        pulse: cfg.reservoir.pulse,
        cycles,
        drift_sigma: cfg.reservoir.drift_sigma.0,
        seed: cfg.seed,
        mode_order: (0..modes).collect(),
        truncation,
    })
}

/// Rejects states with more than [`TRUNCATION_ERROR`] on any top Fock level
/// when `escalate` is set; otherwise only warns.
fn truncation_guard<S: QuantumState>(
    state: &S,
    what: &str,
    escalate: bool,
    warnings: &mut Vec<String>,
) -> Result<(), CliError> {
    for k in 0..state.layout().modes() {
        let p = state.mode_populations(k)?;
        let top = *p.last().expect("cutoff >= 0");
        if escalate && top > TRUNCATION_ERROR {
            return Err(CliError::Numerical(format!(
                "{what}: mode {k} holds {top:.3e} on its top Fock level (limit {TRUNCATION_ERROR:e}); raise layout.cutoff"
            )));
        }
        if top > TRUNCATION_WARNING {
            warnings.push(format!("{what}: mode {k} holds {top:.3e} on its top Fock level"));
        }
    }
    Ok(())
}

fn trajectory_table(run: &ReservoirRun, modes: usize) -> Table {
    let mut header = vec!["cycle".to_string(), "f_lower".into(), "f_exact".into()];
    header.extend((1..=modes).map(|k| format!("p0k_{k}")));
    header.push("trace_deficit".into());
    let mut t = Table::new(&header);
    for rec in &run.trajectory.records {
        let mut row = vec![rec.cycle.to_string(), num(rec.f_lower), num(rec.f_exact)];
        row.extend(rec.p0k.iter().map(|&p| num(p)));
        row.push(num(rec.trace_deficit));
        t.push(row);
    }
    t
}

fn epr_json(e: &EPRReport) -> Value {
    serde_json::to_value(e).expect("report serializes")
}

/// Runs the pumping sequence and returns the engine alongside the run.
fn pump(
    cfg: &ExperimentConfig,
    r: f64,
    modes: usize,
    cutoff: usize,
    cycles: usize,
    truncation: TruncationPolicy,
    stream: u64,
) -> Result<(ReservoirEngine, DensityOperator, ReservoirRun), CliError> {
    let layout = HilbertLayout::new(modes, cutoff, 0)?;
    let rho0 = thermal_state(&layout, cfg.reservoir.initial_nbar)?;
    let cc = cycle_config(cfg, r, modes, cycles, truncation)?;
    let engine = ReservoirEngine::new(&layout, &cc)?;
    let mut rng = trajectory_rng(cfg.seed, stream);
    let run = engine.run_with_rng(&rho0, &mut rng)?;
    Ok((engine, rho0, run))
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let modes = cfg.layout.modes;
    let mut warnings = Vec::new();
    if cfg.squeeze.phi != 0.0 {
        warnings.push("the reservoir targets phi = 0; squeeze.phi is not used by prepare".into());
    }
    let (engine, _, run) = pump(
        cfg,
        cfg.squeeze.r,
        modes,
        cfg.cutoff(),
        cfg.reservoir.cycles,
        TruncationPolicy::Error,
        0,
    )?;
    truncation_guard(&run.final_state, "prepared state", true, &mut warnings)?;
    let mut rng = trajectory_rng(cfg.seed, 1);
    let extra = engine.cycle(&run.final_state, &mut rng)?;
    let settle = extra.trace_distance(&run.final_state)?;
    let epr = duan_epr(&run.final_state, modes)?;
    let ideal = duan_epr(engine.target(), modes)?;
    let last = run.trajectory.last().expect("cycle 0 is always recorded");
    let bound_ok = run
        .trajectory
        .records
        .iter()
        .all(|rec| rec.f_lower <= rec.f_exact + 1e-12);
    let payload = json!({
        "r": cfg.squeeze.r,
        "modes": modes,
        "cutoff": cfg.cutoff(),
        "cycles": cfg.reservoir.cycles,
        "final": {
            "f_lower": last.f_lower,
            "f_exact": last.f_exact,
            "p0k": last.p0k,
            "trace_deficit": last.trace_deficit,
        },
        "f_lower_below_f_exact_every_cycle": bound_ok,
        "cycles_to_0_99": run.trajectory.cycles_to(0.99),
        "extra_cycle_trace_distance": settle,
        "epr_prepared": epr_json(&epr),
        "epr_ideal": epr_json(&ideal),
    });
    Ok(Outcome {
        payload,
        tables: vec![("trajectory.csv".into(), trajectory_table(&run, modes))],
        warnings,
        ..Default::default()
    })
}

pub fn estimate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let r = cfg.squeeze.r;
    let t = cfg.metrology.t_grid.values()?;
    if t.iter().any(|v| *v <= 0.0) {
        return Err(CliError::Config("estimation times must be > 0".into()));
    }
    let points = metrology::variance_sweep(
        r,
        cfg.metrology.omega_plus.0,
        cfg.metrology.omega_minus.0,
        &t,
        cfg.metrology.trials,
        cfg.seed,
    )?;
    let mut table = Table::new(&["t", "var_plus", "var_minus", "var_analytic", "db_plus", "db_minus"]);
    for p in &points {
        table.push(vec![
            num(p.t),
            num(p.var_plus),
            num(p.var_minus),
            num(p.var_analytic),
            num(p.db_plus),
            num(p.db_minus),
        ]);
    }
    let plus: Vec<f64> = points.iter().map(|p| p.var_plus).collect();
    let minus: Vec<f64> = points.iter().map(|p| p.var_minus).collect();
    let (slope_plus, slope_minus) = if t.len() >= 2 {
        (
            Some(metrology::loglog_slope(&t, &plus)),
            Some(metrology::loglog_slope(&t, &minus)),
        )
    } else {
        (None, None)
    };
    let db = metrology::sweep_enhancement_db(&points);
    let spread = |f: fn(&metrology::SweepPoint) -> f64| {
        let v: Vec<f64> = points.iter().map(f).collect();
        metrology::estimation::mean_and_variance(&v).1.sqrt()
    };
    let payload = json!({
        "r": r,
        "trials": cfg.metrology.trials,
        "points": points.len(),
        "loglog_slope": [slope_plus, slope_minus],
        "enhancement_db": db,
        "enhancement_db_point_spread": [spread(|p| p.db_plus), spread(|p| p.db_minus)],
        "analytic_enhancement_db": metrology::analytic_enhancement_db(r),
    });
    Ok(Outcome {
        payload,
        tables: vec![("sweep.csv".into(), table)],
        ..Default::default()
    })
}

pub fn epr_sweep(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let cutoff = cfg.epr_sweep.cutoff;
    let cycles = cfg.epr_sweep.cycles;
    let rows: Vec<(f64, Value, f64, f64, Vec<String>)> = cfg
        .epr_sweep
        .r_values
        .par_iter()
        .enumerate()
        .map(|(i, &r)| -> Result<_, CliError> {
            let mut warnings = Vec::new();
            let needed = squeeze::min_cutoff(r);
            if needed > cutoff {
                warnings.push(format!(
                    "r = {r}: reservoir run truncated at N = {cutoff}, the tail rule asks for {needed}"
                ));
            }
            let (_, _, run) = pump(cfg, r, 2, cutoff, cycles, TruncationPolicy::Warn, i as u64)?;
            truncation_guard(&run.final_state, &format!("r = {r}"), false, &mut warnings)?;
            let reservoir = duan_epr(&run.final_state, 2)?;
            let n = needed.max(1);
            let psi = squeeze::tmss_state(&HilbertLayout::new(2, n, 0)?, &SqueezeSpec::two_mode(r))?;
            let ideal = duan_epr(&psi, 2)?;
            let last = run.trajectory.last().expect("recorded");
            let detail = json!({
                "r": r,
                "epr_reservoir": reservoir.delta_epr,
                "epr_ideal": ideal.delta_epr,
                "f_exact": last.f_exact,
                "f_lower": last.f_lower,
                "ideal_cutoff": n,
            });
            Ok((r, detail, reservoir.delta_epr, ideal.delta_epr, warnings))
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(&["r", "epr_reservoir", "epr_ideal", "bound"]);
    let mut warnings = Vec::new();
    let mut details = Vec::new();
    for (r, detail, res, ideal, w) in rows {
        table.push(vec![num(r), num(res), num(ideal), num(1.0)]);
        details.push(detail);
        warnings.extend(w);
    }
    let payload = json!({
        "cutoff": cutoff,
        "cycles": cycles,
        "bound": 1.0,
        "points": details,
    });
    Ok(Outcome {
        payload,
        tables: vec![("epr_sweep.csv".into(), table)],
        warnings,
        ..Default::default()
    })
}

pub fn qfi(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    if cfg.layout.modes != 2 {
        return Err(CliError::Config("qfi uses the two-mode probe; set layout.modes = 2".into()));
    }
    let r = cfg.squeeze.r;
    let t = cfg.metrology.qfi_t;
    let layout = HilbertLayout::new(2, cfg.cutoff(), 0)?;
    let psi = squeeze::tmss_state(&layout, &cfg.squeeze_spec(2))?;
    let numeric = metrology::qfi_matrix_numeric(&psi, t)?;
    let analytic = metrology::qfi_matrix_analytic(r, t)?;
    let max_rel = (0..2)
        .map(|k| ((numeric[k][k] - analytic[k][k]) / analytic[k][k]).abs())
        .fold(0.0, f64::max);
    let off = numeric[0][1].abs().max(numeric[1][0].abs());
    let inv = metrology::qfi::inverse(&numeric)?;
    let payload = json!({
        "r": r,
        "t": t,
        "cutoff": cfg.cutoff(),
        "numeric": numeric,
        "analytic": analytic,
        "max_relative_deviation": max_rel,
        "max_off_diagonal": off,
        "trace_inverse": metrology::qfi::trace(&inv),
        "trace_inverse_expected": (-2.0 * r).exp() / (t * t),
    });
    Ok(Outcome {
        payload,
        ..Default::default()
    })
}

fn model_spec(cfg: &ExperimentConfig) -> ModelSpec {
    let s = &cfg.sideband;
    ModelSpec {
        model: s.model,
        rabi: s.rabi.iter().map(|r| r.0).collect(),
        gamma0: s.gamma0,
        gamma_exponent: s.gamma_exponent,
        unnormalized: s.unnormalized,
    }
}

/// Sums a row-major joint table over every axis except `mode`.
fn marginal(joint: &[f64], levels: usize, modes: usize, mode: usize) -> Vec<f64> {
    let mut out = vec![0.0; levels];
    let inner = levels.pow((modes - 1 - mode) as u32);
    for (i, p) in joint.iter().enumerate() {
        out[(i / inner) % levels] += p;
    }
    out
}

/// Joint populations up to `n_max` of the configured state in `basis`.
fn state_populations(
    cfg: &ExperimentConfig,
    prepared: bool,
    modes: usize,
    n_max: usize,
    warnings: &mut Vec<String>,
) -> Result<Vec<f64>, CliError> {
    let r = cfg.squeeze.r;
    let basis = cfg.sideband.basis;
    if !prepared {
        if basis == PopulationBasis::Engineered {
            // The ideal state is the engineered vacuum.
            let mut p = vec![0.0; (n_max + 1).pow(modes as u32)];
            p[0] = 1.0;
            return Ok(p);
        }
        let spec = cfg.squeeze_spec(modes);
        let n = spec.min_cutoff().max(n_max).max(1);
        let psi = squeeze::squeezed_vacuum(&HilbertLayout::new(modes, n, 0)?, &spec)?;
        return Ok(sideband::fock_populations(&psi, n_max));
    }
    let (cutoff, policy) = if modes == 3 {
        (cfg.three_mode.reservoir_cutoff, TruncationPolicy::Warn)
    } else {
        (cfg.cutoff(), TruncationPolicy::Error)
    };
    if cutoff < n_max {
        return Err(CliError::Config(format!("sideband.n_max {n_max} exceeds the reservoir cutoff {cutoff}")));
    }
    let cycles = if modes == 3 { cfg.three_mode.cycles } else { cfg.reservoir.cycles };
    let (engine, _, run) = pump(cfg, r, modes, cutoff, cycles, policy, 0)?;
    truncation_guard(&run.final_state, "prepared state", modes != 3, warnings)?;
    Ok(match basis {
        PopulationBasis::Engineered => sideband::fock_populations(&engine.engineered_frame(&run.final_state)?, n_max),
        PopulationBasis::Fock => sideband::fock_populations(&run.final_state, n_max),
    })
}

/// Population tables, one per curve, for `sideband simulate`.
fn curve_populations(cfg: &ExperimentConfig, warnings: &mut Vec<String>) -> Result<Vec<Vec<f64>>, CliError> {
    let s = &cfg.sideband;
    let modes = cfg.layout.modes;
    let prepared = match &s.source {
        CurveSource::Populations { values } => {
            if values.is_empty() {
                return Err(CliError::Config("sideband.source.values is empty".into()));
            }
            return Ok(values.clone());
        }
        CurveSource::IdealState => false,
        CurveSource::PreparedState => true,
    };
    let joint = state_populations(cfg, prepared, modes, s.n_max, warnings)?;
    let levels = s.n_max + 1;
    match s.model.dimensionality() {
        1 => Ok((0..modes).map(|k| marginal(&joint, levels, modes, k)).collect()),
        d if d == modes => Ok(vec![joint]),
        d => Err(CliError::Config(format!(
            "model {:?} reads a {d}-mode state but layout.modes = {modes}",
            s.model
        ))),
    }
}

/// `Π_k P_k(0)` over the marginals of a joint engineered-basis table.
fn ground_product(joint: &[f64], levels: usize, dims: usize) -> f64 {
    (0..dims).map(|k| marginal(joint, levels, dims, k)[0]).product()
}

fn levels_of(len: usize, dims: usize) -> Result<usize, CliError> {
    Ok(sideband::model::levels_for(len, dims)?)
}

pub fn sideband_simulate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut warnings = Vec::new();
    let spec = model_spec(cfg);
    spec.validate()?;
    let dims = spec.model.dimensionality();
    let grid = cfg.sideband.grid.values()?;
    let tables = curve_populations(cfg, &mut warnings)?;
    let mut out_tables = Vec::new();
    let mut curves_json = Vec::new();
    for (i, pops) in tables.iter().enumerate() {
        let seed = derive_seed(cfg.seed, i as u64);
        let curve = sideband::synthesize_curve(&spec, pops, vec![grid.clone(); dims], cfg.sideband.repetitions, seed)?;
        let name = format!("curve_{i}.csv");
        out_tables.push((name.clone(), curves::curve_table(&curve)));
        let levels = levels_of(pops.len(), dims)?;
        curves_json.push(json!({
            "file": name,
            "seed": seed,
            "populations": pops,
            "ground_product": ground_product(pops, levels, dims),
        }));
    }
    let f_lower = engineered_bound(cfg, tables.iter().map(|p| (p.as_slice(), 0.0)).collect::<Vec<_>>().as_slice(), dims)?;
    let payload = json!({
        "model": spec.model,
        "basis": cfg.sideband.basis,
        "repetitions": cfg.sideband.repetitions,
        "grid_points_per_axis": grid.len(),
        "curves": curves_json,
        "f_lower": f_lower.map(|(f, _)| f),
    });
    Ok(Outcome {
        payload,
        tables: out_tables,
        warnings,
        ..Default::default()
    })
}

/// Fidelity lower bound from engineered-basis populations: the product of
/// per-curve ground populations for 1-D models, or the product of the
/// marginal ground populations of a single multi-axis curve. Returns the
/// bound and its propagated standard error (from `(p0, se0)` per curve for
/// 1-D models).
fn engineered_bound(cfg: &ExperimentConfig, curves: &[(&[f64], f64)], dims: usize) -> Result<Option<(f64, f64)>, CliError> {
    if cfg.sideband.basis != PopulationBasis::Engineered {
        return Ok(None);
    }
    if dims == 1 {
        let f: f64 = curves.iter().map(|(p, _)| p[0]).product();
        let rel2: f64 = curves
            .iter()
            .map(|(p, se)| if p[0] > 0.0 { (se / p[0]).powi(2) } else { 0.0 })
            .sum();
        return Ok(Some((f, f * rel2.sqrt())));
    }
    if curves.len() != 1 {
        return Ok(None);
    }
    let levels = levels_of(curves[0].0.len(), dims)?;
    Ok(Some((ground_product(curves[0].0, levels, dims), f64::NAN)))
}

fn is_constant(curve: &FlopCurve) -> bool {
    curve.p_down.windows(2).all(|w| w[0] == w[1])
}

pub fn sideband_fit(cfg: &ExperimentConfig, inputs: &[PathBuf]) -> Result<Outcome, CliError> {
    let spec = model_spec(cfg);
    spec.validate()?;
    let dims = spec.model.dimensionality();
    let inputs: Vec<PathBuf> = if inputs.is_empty() {
        cfg.sideband.inputs.clone()
    } else {
        inputs.to_vec()
    };
    if inputs.is_empty() {
        return Err(CliError::Config("sideband fit needs at least one input curve".into()));
    }
    let curves: Vec<FlopCurve> = inputs
        .iter()
        .map(|p| curves::read_curve(p, dims))
        .collect::<Result<_, _>>()?;
    for (path, c) in inputs.iter().zip(&curves) {
        if is_constant(c) {
            return Err(CliError::Numerical(format!(
                "{}: every point equals {}; a flat curve carries no population information",
                path.display(),
                c.p_down[0]
            )));
        }
    }
    let estimates: Vec<PopulationEstimate> = curves
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut fc = FitConfig::new(spec.clone(), cfg.sideband.n_max).floating_gamma(cfg.sideband.float_gamma);
            fc.starts = cfg.sideband.starts;
            fc.seed = derive_seed(cfg.seed, i as u64);
            sideband::fit_populations(c, &fc)
        })
        .collect::<Result<_, _>>()?;

    let mut warnings = Vec::new();
    let mut failure = None;
    let mut fits = Vec::new();
    let mut table = Table::new(&["curve", "label", "population", "std_error"]);
    let levels = cfg.sideband.n_max + 1;
    for (i, (path, est)) in inputs.iter().zip(&estimates).enumerate() {
        if !est.converged {
            let msg = format!(
                "{}: fit did not converge in {} iterations; the best point found is reported",
                path.display(),
                est.iterations
            );
            warnings.push(msg.clone());
            failure.get_or_insert(CliError::Numerical(msg));
        }
        for (j, (v, se)) in est.values.iter().zip(&est.std_errors).enumerate() {
            let label = sideband::model::unravel(j, &vec![levels; dims])
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(":");
            table.push(vec![i.to_string(), label, num(*v), num(*se)]);
        }
        fits.push(json!({
            "input": path.display().to_string(),
            "points": curves[i].len(),
            "repetitions": curves[i].repetitions,
            "estimate": est,
        }));
    }
    let pairs: Vec<(&[f64], f64)> = estimates.iter().map(|e| (e.values.as_slice(), e.std_errors[0])).collect();
    let bound = engineered_bound(cfg, &pairs, dims)?;
    let payload = json!({
        "model": spec.model,
        "basis": cfg.sideband.basis,
        "n_max": cfg.sideband.n_max,
        "fits": fits,
        "f_lower": bound.map(|(f, _)| f),
        "f_lower_std_error": bound.and_then(|(_, se)| se.is_finite().then_some(se)),
    });
    let doc = serde_json::to_value(&estimates).expect("estimates serialize");
    Ok(Outcome {
        payload,
        tables: vec![("populations.csv".into(), table)],
        documents: vec![("estimates.json".into(), doc)],
        warnings,
        failure,
    })
}

pub fn three_mode(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let r = cfg.squeeze.r;
    let mut warnings = Vec::new();
    let spec = SqueezeSpec::three_mode(r);
    let needed = spec.min_cutoff().max(1);
    let n = cfg.three_mode.ideal_cutoff;
    if n < needed {
        return Err(CliError::Config(format!(
            "three_mode.ideal_cutoff {n} is below the truncation minimum {needed} for r = {r}"
        )));
    }
    let psi: StateVector = squeeze::three_mode_state(&HilbertLayout::new(3, n, 0)?, r)?;
    let residuals = squeeze::bogoliubov_residuals(&psi, &spec)?;
    let epr = duan_epr(&psi, 3)?;
    let gains = metrology::axis_gains(&psi)?;

    let cutoff = cfg.three_mode.reservoir_cutoff;
    if cutoff < needed {
        warnings.push(format!(
            "reservoir run truncated at N = {cutoff}; the tail rule asks for {needed}"
        ));
    }
    let (engine, _, run) = pump(cfg, r, 3, cutoff, cfg.three_mode.cycles, TruncationPolicy::Warn, 0)?;
    truncation_guard(&run.final_state, "three-mode reservoir state", false, &mut warnings)?;
    let prepared = duan_epr(&run.final_state, 3)?;
    let target = duan_epr(engine.target(), 3)?;
    let last = run.trajectory.last().expect("recorded");
    let payload = json!({
        "r": r,
        "ideal": {
            "cutoff": n,
            "k_residuals": residuals,
            "epr": epr_json(&epr),
            "axis_gains_db": gains,
        },
        "reservoir": {
            "cutoff": cutoff,
            "cycles": cfg.three_mode.cycles,
            "f_exact": last.f_exact,
            "f_lower": last.f_lower,
            "epr_prepared": epr_json(&prepared),
            "epr_truncated_target": epr_json(&target),
        },
    });
    Ok(Outcome {
        payload,
        tables: vec![("three_mode_trajectory.csv".into(), trajectory_table(&run, 3))],
        warnings,
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginals_of_product_table() {
        // p(n, m) = a(n) b(m)
        let a = [0.7, 0.2, 0.1];
        let b = [0.5, 0.3, 0.2];
        let joint: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
        let ma = marginal(&joint, 3, 2, 0);
        let mb = marginal(&joint, 3, 2, 1);
        for k in 0..3 {
            assert!((ma[k] - a[k]).abs() < 1e-15);
            assert!((mb[k] - b[k]).abs() < 1e-15);
        }
        assert!((ground_product(&joint, 3, 2) - 0.35).abs() < 1e-15);
    }

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..4).map(|i| derive_seed(7, i)).collect();
        for i in 0..4 {
            for j in 0..i {
                assert_ne!(s[i], s[j]);
            }
        }
        assert_eq!(derive_seed(7, 2), s[2]);
    }
}
