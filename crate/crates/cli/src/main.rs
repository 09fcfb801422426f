//! `squeezelab`: reservoir preparation, displacement estimation, entanglement
//! sweeps and sideband population fits from one JSON configuration.

mod commands;
mod config;
mod curves;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::commands::Outcome;
use crate::config::ExperimentConfig;
use crate::error::{io_error, CliError};
use crate::output::{config_hash, Artifacts, RunReport, TOOL, VERSION};

#[derive(Parser, Debug)]
#[command(name = "squeezelab", version, about = "Dissipative squeezing and squeezed-probe metrology simulator")]
struct Cli {
    /// JSON configuration file; every section is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed (overrides seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (overrides threads); 1 gives bit-reproducible output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override a config field, e.g. `--set squeeze.r=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pump a thermal state toward the squeezed vacuum and record fidelities.
    Prepare,
    /// Monte-Carlo displacement estimation over the metrology time grid.
    Estimate,
    /// Duan quantity of reservoir-prepared and ideal states over r.
    EprSweep,
    /// Quantum Fisher matrix of the two-mode probe, analytic and numeric.
    Qfi,
    /// Blue-sideband curve synthesis and population fits.
    Sideband {
        #[command(subcommand)]
        action: SidebandAction,
    },
    /// Ideal three-mode state checks plus a reduced-cutoff reservoir run.
    ThreeMode,
}

#[derive(Subcommand, Debug)]
enum SidebandAction {
    /// Write synthetic curves from populations or a state.
    Simulate,
    /// Fit population tables to curve CSV files.
    Fit {
        /// Curve files (override sideband.inputs).
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Prepare => "prepare",
            Command::Estimate => "estimate",
            Command::EprSweep => "epr-sweep",
            Command::Qfi => "qfi",
            Command::Sideband {
                action: SidebandAction::Simulate,
            } => "sideband simulate",
            Command::Sideband {
                action: SidebandAction::Fit { .. },
            } => "sideband fit",
            Command::ThreeMode => "three-mode",
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let doc = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => Value::Null,
    };
    let mut cfg = ExperimentConfig::from_value(doc, &cli.overrides)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    cfg.resolve()
}

/// The echoed configuration omits the output location so that runs into
/// different directories stay byte-identical.
fn echo(cfg: &ExperimentConfig) -> Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Value::Object(map) = &mut v {
        map.remove("output");
    }
    v
}

fn run(cli: &Cli) -> Result<Option<CliError>, CliError> {
    let cfg = load_config(cli)?;
    let echoed = echo(&cfg);
    if cli.print_config {
        say(&serde_json::to_string_pretty(&echoed).expect("serializes"));
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;

    let started = Instant::now();
    let outcome: Outcome = match &cli.command {
        Command::Prepare => commands::prepare(&cfg)?,
        Command::Estimate => commands::estimate(&cfg)?,
        Command::EprSweep => commands::epr_sweep(&cfg)?,
        Command::Qfi => commands::qfi(&cfg)?,
        Command::Sideband {
            action: SidebandAction::Simulate,
        } => commands::sideband_simulate(&cfg)?,
        Command::Sideband {
            action: SidebandAction::Fit { inputs },
        } => commands::sideband_fit(&cfg, inputs)?,
        Command::ThreeMode => commands::three_mode(&cfg)?,
    };
    let elapsed = started.elapsed();

    let hash = config_hash(&echoed);
    for w in &outcome.warnings {
        log::warn!("{w}");
    }
    let report = RunReport {
        tool: TOOL,
        version: VERSION,
        command: cli.command.name().to_string(),
        seed: cfg.seed,
        threads: cfg.threads,
        config_sha256: hash.clone(),
        config: echoed,
        payload: outcome.payload,
        warnings: outcome.warnings,
    };
    let mut artifacts = Artifacts::default();
    for (name, table) in &outcome.tables {
        artifacts.add(name.clone(), table.render(&hash)?);
    }
    for (name, doc) in &outcome.documents {
        artifacts.add(name.clone(), pretty(doc));
    }
    artifacts.add("report.json", pretty(&report));
    let written = artifacts.commit(&cfg.output.dir)?;
    for path in &written {
        say(&path.display().to_string());
    }
    eprintln!("{TOOL} {}: finished in {:.3} s", cli.command.name(), elapsed.as_secs_f64());
    Ok(outcome.failure)
}

/// Line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn pretty<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(flagged)) => {
            eprintln!("{TOOL}: {flagged}");
            ExitCode::from(flagged.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{TOOL}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
