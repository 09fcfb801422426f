//! Experiment configuration: one JSON document, every section optional.
//!
//! Precedence, lowest first: built-in defaults, the config file, `--set`
//! overrides, then the dedicated `--seed`, `--threads` and `--out` flags.
//! Rates accept a number in rad/s or a string `"2pi*X"` with `X` in Hz.

use std::fmt;
use std::path::PathBuf;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use squeezelab::reservoir::PulseDuration;
use squeezelab::sideband::Model;
use squeezelab::squeeze::{SqueezeSpec, TruncationPolicy};

use crate::error::CliError;

/// Angular rate in rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rate(pub f64);

impl Rate {
    pub fn two_pi(hz: f64) -> Self {
        Rate(2.0 * std::f64::consts::PI * hz)
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

/// Parses `"2pi*6.8e3"`, `"2*pi*6.8e3"` or a plain number.
pub fn parse_rate(text: &str) -> Result<f64, String> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let lower = t.to_ascii_lowercase();
    for prefix in ["2pi*", "2*pi*"] {
        if let Some(rest) = lower.strip_prefix(prefix) {
            let hz: f64 = rest.parse().map_err(|_| format!("invalid rate '{text}'"))?;
            return Ok(2.0 * std::f64::consts::PI * hz);
        }
    }
    lower.parse().map_err(|_| format!("invalid rate '{text}': expected a number or \"2pi*<Hz>\""))
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RateVisitor;
        impl Visitor<'_> for RateVisitor {
            type Value = Rate;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rate in rad/s or a string \"2pi*<Hz>\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rate, E> {
                Ok(Rate(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rate, E> {
                Ok(Rate(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rate, E> {
                Ok(Rate(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rate, E> {
                parse_rate(v).map(Rate).map_err(E::custom)
            }
        }
        d.deserialize_any(RateVisitor)
    }
}

/// Explicit times, or `points` samples from `start` to `stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

impl TimeGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let v = match self {
            TimeGrid::List(v) => v.clone(),
            TimeGrid::Range {
                start,
                stop,
                points,
                spacing,
            } => {
                if *points == 0 {
                    return Err(CliError::Config("time grid needs at least one point".into()));
                }
                match spacing {
                    Spacing::Linear => (0..*points)
                        .map(|i| {
                            if *points == 1 {
                                *start
                            } else {
                                start + (stop - start) * i as f64 / (*points - 1) as f64
                            }
                        })
                        .collect(),
                    Spacing::Log => {
                        if !(*start > 0.0 && *stop > 0.0) {
                            return Err(CliError::Config("log-spaced grid needs positive bounds".into()));
                        }
                        squeezelab::metrology::log_grid(*start, *stop, *points)
                    }
                }
            }
        };
        if v.is_empty() || v.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(CliError::Config("time grid values must be finite and >= 0".into()));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    #[serde(default = "two_modes")]
    pub modes: usize,
    /// Per-mode Fock cutoff; resolved to the truncation minimum, padded for
    /// two modes, when absent.
    #[serde(default)]
    pub cutoff: Option<usize>,
    /// Ancilla spins; the pumping sequence uses exactly one.
    #[serde(default = "one_spin")]
    pub spins: usize,
}

fn two_modes() -> usize {
    2
}

fn one_spin() -> usize {
    1
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            modes: 2,
            cutoff: None,
            spins: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezeConfig {
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default)]
    pub phi: f64,
}

fn default_r() -> f64 {
    0.79
}

impl Default for SqueezeConfig {
    fn default() -> Self {
        Self { r: default_r(), phi: 0.0 }
    }
}

fn default_rabi() -> Vec<Rate> {
    vec![Rate::two_pi(6.8e3)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirConfig {
    /// Coupling rate per mode; a single entry applies to every mode.
    #[serde(default = "default_rabi")]
    pub omega: Vec<Rate>,
    #[serde(default = "default_pulse")]
    pub pulse: PulseDuration,
    #[serde(default = "default_cycles")]
    pub cycles: usize,
    #[serde(default = "zero_rate")]
    pub drift_sigma: Rate,
    /// Mean phonon number of the thermal input state.
    #[serde(default = "default_nbar")]
    pub initial_nbar: f64,
}

fn default_pulse() -> PulseDuration {
    PulseDuration::QuarterPeriod
}
fn default_cycles() -> usize {
    10
}
fn zero_rate() -> Rate {
    Rate(0.0)
}
fn default_nbar() -> f64 {
    0.2
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        Self {
            omega: default_rabi(),
            pulse: default_pulse(),
            cycles: default_cycles(),
            drift_sigma: zero_rate(),
            initial_nbar: default_nbar(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetrologyConfig {
    #[serde(default = "default_displacement")]
    pub omega_plus: Rate,
    #[serde(default = "default_displacement")]
    pub omega_minus: Rate,
    #[serde(default = "default_t_grid")]
    pub t_grid: TimeGrid,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Interrogation time for the Fisher-information command, seconds.
    #[serde(default = "default_qfi_t")]
    pub qfi_t: f64,
}

fn default_displacement() -> Rate {
    Rate::two_pi(5.0e3)
}
fn default_t_grid() -> TimeGrid {
    TimeGrid::Range {
        start: 1e-5,
        stop: 1e-4,
        points: 8,
        spacing: Spacing::Log,
    }
}
fn default_trials() -> usize {
    200
}
fn default_qfi_t() -> f64 {
    1.0
}

impl Default for MetrologyConfig {
    fn default() -> Self {
        Self {
            omega_plus: default_displacement(),
            omega_minus: default_displacement(),
            t_grid: default_t_grid(),
            trials: default_trials(),
            qfi_t: default_qfi_t(),
        }
    }
}

/// Where synthetic sideband curves come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSource {
    /// One population table per curve.
    Populations { values: Vec<Vec<f64>> },
    /// The ideal squeezed vacuum of the `squeeze` section.
    IdealState,
    /// The output of the reservoir run of the `reservoir` section.
    PreparedState,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationBasis {
    /// Eigenbasis of the Bogoliubov modes; ground populations bound the fidelity.
    #[default]
    Engineered,
    /// Laboratory Fock basis.
    Fock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidebandConfig {
    #[serde(default = "default_model")]
    pub model: Model,
    #[serde(default = "default_rabi")]
    pub rabi: Vec<Rate>,
    #[serde(default)]
    pub gamma0: f64,
    #[serde(default = "one")]
    pub gamma_exponent: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Pulse-duration grid, applied to every axis.
    #[serde(default = "default_sideband_grid")]
    pub grid: TimeGrid,
    /// Shots per point; `null` for exact curves.
    #[serde(default = "default_repetitions")]
    pub repetitions: Option<u32>,
    #[serde(default)]
    pub unnormalized: bool,
    #[serde(default = "yes")]
    pub float_gamma: bool,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_source")]
    pub source: CurveSource,
    /// Basis in which state populations are read for synthetic curves.
    #[serde(default)]
    pub basis: PopulationBasis,
    /// Curve files for `sideband fit`.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
}

fn default_model() -> Model {
    Model::Single
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_n_max() -> usize {
    4
}
fn default_sideband_grid() -> TimeGrid {
    TimeGrid::Range {
        start: 0.0,
        stop: 5e-4,
        points: 200,
        spacing: Spacing::Linear,
    }
}
fn default_repetitions() -> Option<u32> {
    Some(200)
}
fn default_starts() -> usize {
    squeezelab::sideband::fit::MIN_STARTS
}
fn default_source() -> CurveSource {
    CurveSource::IdealState
}

impl Default for SidebandConfig {
    fn default() -> Self {
        Self {
            model: default_model(),
            rabi: default_rabi(),
            gamma0: 0.0,
            gamma_exponent: 1.0,
            n_max: default_n_max(),
            grid: default_sideband_grid(),
            repetitions: default_repetitions(),
            unnormalized: false,
            float_gamma: true,
            starts: default_starts(),
            source: default_source(),
            basis: PopulationBasis::Engineered,
            inputs: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EprSweepConfig {
    #[serde(default = "default_r_values")]
    pub r_values: Vec<f64>,
    /// Fock cutoff for the reservoir runs; larger `r` are truncated with a warning.
    #[serde(default = "default_sweep_cutoff")]
    pub cutoff: usize,
    #[serde(default = "default_cycles")]
    pub cycles: usize,
}

fn default_r_values() -> Vec<f64> {
    vec![0.1, 0.3, 0.5, 0.79, 1.0, 1.2]
}
fn default_sweep_cutoff() -> usize {
    20
}

impl Default for EprSweepConfig {
    fn default() -> Self {
        Self {
            r_values: default_r_values(),
            cutoff: default_sweep_cutoff(),
            cycles: default_cycles(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeModeConfig {
    /// Fock cutoff of the ideal state. The truncated three-mode state is not
    /// annihilated exactly by `K_j`; the residual falls to 1e-5 near N = 32
    /// at r = 0.5.
    #[serde(default = "default_three_mode_ideal_cutoff")]
    pub ideal_cutoff: usize,
    /// Fock cutoff of the dense reservoir simulation.
    #[serde(default = "default_three_mode_cutoff")]
    pub reservoir_cutoff: usize,
    #[serde(default = "default_cycles")]
    pub cycles: usize,
}

fn default_three_mode_ideal_cutoff() -> usize {
    32
}

fn default_three_mode_cutoff() -> usize {
    8
}

impl Default for ThreeModeConfig {
    fn default() -> Self {
        Self {
            ideal_cutoff: default_three_mode_ideal_cutoff(),
            reservoir_cutoff: default_three_mode_cutoff(),
            cycles: default_cycles(),
        }
    }
}

/// Reference values carried through to the report; nothing reads them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    pub trap_frequencies: Vec<Rate>,
    pub lamb_dicke: Vec<f64>,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            trap_frequencies: vec![Rate::two_pi(1.12e6), Rate::two_pi(0.90e6)],
            lamb_dicke: vec![0.06, 0.07],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub layout: LayoutConfig,
    #[serde(default)]
    pub squeeze: SqueezeConfig,
    #[serde(default)]
    pub reservoir: ReservoirConfig,
    #[serde(default)]
    pub metrology: MetrologyConfig,
    #[serde(default)]
    pub sideband: SidebandConfig,
    #[serde(default)]
    pub epr_sweep: EprSweepConfig,
    #[serde(default)]
    pub three_mode: ThreeModeConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub constants: Constants,
}

fn default_threads() -> usize {
    1
}

/// Sets `path` (dot-separated) in a JSON object tree. The value is parsed as
/// JSON, falling back to a string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects key=value, got '{assignment}'")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("invalid key path '{path}'")));
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("'{path}' descends into a non-object")))?;
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| CliError::Config(format!("'{path}' descends into a non-object")))?
        .insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    /// Parses a document after applying overrides.
    pub fn from_value(mut doc: Value, overrides: &[String]) -> Result<Self, CliError> {
        if doc.is_null() {
            doc = Value::Object(Default::default());
        }
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        serde_json::from_value(doc).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Fills in derived defaults and checks cross-field invariants.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let modes = self.layout.modes;
        if !(2..=3).contains(&modes) {
            return Err(CliError::Config(format!("layout.modes must be 2 or 3, got {modes}")));
        }
        if !(self.squeeze.r >= 0.0 && self.squeeze.r.is_finite()) || !self.squeeze.phi.is_finite() {
            return Err(CliError::Config("squeeze.r must be finite and >= 0".into()));
        }
        if self.layout.spins != 1 {
            return Err(CliError::Config(format!("layout.spins must be 1, got {}", self.layout.spins)));
        }
        if !(self.reservoir.initial_nbar >= 0.0 && self.reservoir.initial_nbar.is_finite()) {
            return Err(CliError::Config("reservoir.initial_nbar must be >= 0".into()));
        }
        let required = self
            .squeeze_spec(modes)
            .min_cutoff()
            .max(thermal_cutoff(self.reservoir.initial_nbar))
            .max(1);
        match self.layout.cutoff {
            None if modes == 2 => self.layout.cutoff = Some(required + RESERVOIR_PADDING),
            None => self.layout.cutoff = Some(required),
            Some(n) if n < required => {
                return Err(CliError::Config(format!(
                    "layout.cutoff {n} is below the truncation minimum {required} for r = {} and initial_nbar = {}",
                    self.squeeze.r, self.reservoir.initial_nbar
                )))
            }
            Some(_) => {}
        }
        self.reservoir.omega = expand(&self.reservoir.omega, modes, "reservoir.omega")?;
        positive(&self.reservoir.omega, "reservoir.omega")?;
        if !(self.reservoir.drift_sigma.0 >= 0.0) {
            return Err(CliError::Config("reservoir.drift_sigma must be >= 0".into()));
        }
        let axes = self.sideband.model.dimensionality();
        self.sideband.rabi = expand(&self.sideband.rabi, axes, "sideband.rabi")?;
        positive(&self.sideband.rabi, "sideband.rabi")?;
        if self.sideband.repetitions == Some(0) {
            return Err(CliError::Config("sideband.repetitions must be >= 1".into()));
        }
        if self.metrology.trials < 2 {
            return Err(CliError::Config("metrology.trials must be >= 2".into()));
        }
        if self.epr_sweep.r_values.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(CliError::Config("epr_sweep.r_values must be finite and >= 0".into()));
        }
        if self.sideband.n_max == 0 {
            return Err(CliError::Config("sideband.n_max must be >= 1".into()));
        }
        let thermal = thermal_cutoff(self.reservoir.initial_nbar);
        if self.epr_sweep.cutoff < thermal || self.three_mode.reservoir_cutoff < thermal {
            return Err(CliError::Config(format!(
                "reservoir cutoffs must hold the thermal input: need >= {thermal} for initial_nbar = {}",
                self.reservoir.initial_nbar
            )));
        }
        if self.threads == 0 {
            return Err(CliError::Config("threads must be >= 1".into()));
        }
        self.metrology.t_grid.values()?;
        self.sideband.grid.values()?;
        Ok(self)
    }

    pub fn cutoff(&self) -> usize {
        self.layout.cutoff.expect("resolved config")
    }

    pub fn squeeze_spec(&self, modes: usize) -> SqueezeSpec {
        let base = if modes == 3 {
            SqueezeSpec::three_mode(self.squeeze.r)
        } else {
            SqueezeSpec::two_mode(self.squeeze.r)
        };
        base.with_phase(self.squeeze.phi)
            .with_policy(TruncationPolicy::Error)
    }
}

/// Extra Fock levels in the default two-mode cutoff. Pumped states keep
/// population in engineered levels the quarter-period pulse cannot empty,
/// and their laboratory-basis tails reach well past the target's minimum.
pub const RESERVOIR_PADDING: usize = 12;

/// Smallest cutoff whose thermal tail `(n/(1+n))^(N+1)` is below `1e-6`.
pub fn thermal_cutoff(nbar: f64) -> usize {
    let ratio = nbar / (1.0 + nbar);
    let mut n = 0;
    while ratio.powi(n as i32 + 1) >= 1e-6 {
        n += 1;
    }
    n
}

fn expand(rates: &[Rate], n: usize, what: &str) -> Result<Vec<Rate>, CliError> {
    match rates.len() {
        1 => Ok(vec![rates[0]; n]),
        k if k == n => Ok(rates.to_vec()),
        k => Err(CliError::Config(format!("{what} has {k} entries, expected 1 or {n}"))),
    }
}

fn positive(rates: &[Rate], what: &str) -> Result<(), CliError> {
    if rates.iter().any(|r| !(r.0 > 0.0 && r.0.is_finite())) {
        return Err(CliError::Config(format!("{what} must be positive")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_sugar() {
        let r: Rate = serde_json::from_str("\"2pi*6.8e3\"").unwrap();
        assert!((r.0 - 2.0 * std::f64::consts::PI * 6.8e3).abs() < 1e-9);
        let r: Rate = serde_json::from_str("42.5").unwrap();
        assert_eq!(r.0, 42.5);
        assert!(serde_json::from_str::<Rate>("\"fast\"").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let doc = serde_json::json!({"squeeze": {"r": 0.5, "colour": 1}});
        assert!(ExperimentConfig::from_value(doc, &[]).is_err());
        let doc = serde_json::json!({"extra": true});
        assert!(ExperimentConfig::from_value(doc, &[]).is_err());
    }

    #[test]
    fn overrides_and_resolution() {
        let cfg = ExperimentConfig::from_value(Value::Null, &["squeeze.r=0.5".into(), "metrology.trials=50".into()])
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(cfg.squeeze.r, 0.5);
        assert_eq!(cfg.metrology.trials, 50);
        assert_eq!(
            cfg.layout.cutoff,
            Some(squeezelab::squeeze::min_cutoff(0.5).max(thermal_cutoff(0.2)) + RESERVOIR_PADDING)
        );
        assert_eq!(cfg.reservoir.omega.len(), 2);
        let low = ExperimentConfig::from_value(serde_json::json!({"layout": {"modes": 2, "cutoff": 3}}), &[]).unwrap();
        assert!(low.resolve().is_err());
    }
}
