//! Command-line front end: config-driven sweep orchestration with
//! deterministic parallel execution and atomic CSV/JSON output.
//!
//! Exit codes: 0 success, 2 config parse error (syntax, unknown or missing
//! key), 3 invariant violation, 4 experiment/physics error, 5 output I/O
//! error.

// validation uses negated comparisons so NaN fails the checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{load_config, ConfigError};
use spinsync::{
    bessel_j, dressed_splitting, floquet_quasienergies, quasienergy_gap, FloquetConfig,
};

#[derive(Parser)]
#[command(name = "spinsync", version, about = "Doubly driven spin qubit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Worker threads; defaults to the available hardware concurrency.
        #[arg(long)]
        jobs: Option<usize>,
        /// Shot-noise seed; only meaningful when the config enables noise.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for result.csv, summary.json, meta.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Parse a config and check its invariants without running anything.
    Validate { config: PathBuf },
    /// Direct analytic queries for scripting.
    Oracle {
        #[command(subcommand)]
        oracle: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Bessel function of the first kind J_n(x).
    Bessel { n: i32, x: f64 },
    /// Doubly dressed splitting √((Ω_R − Ω_m)² + δω0²/4) in MHz.
    Splitting {
        rabi_mhz: f64,
        rf_frequency_mhz: f64,
        rf_amplitude_mhz: f64,
    },
    /// Floquet quasi-energies and gap in MHz: prints "ε₊ ε₋ gap".
    Floquet {
        rabi_mhz: f64,
        rf_frequency_mhz: f64,
        rf_amplitude_mhz: f64,
        #[arg(long, default_value_t = 40)]
        truncation: usize,
        #[arg(long, default_value_t = 1e-9)]
        eigentolerance: f64,
    },
}

enum CliError {
    Config(ConfigError),
    Experiment(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(ConfigError::Invariant { .. }) => 3,
            CliError::Config(_) => 2,
            CliError::Experiment(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(e) => e.to_string(),
            CliError::Experiment(msg) => format!("experiment failed: {msg}"),
            CliError::Io(msg) => format!("output error: {msg}"),
        }
    }
}

fn cmd_run(
    config_path: &Path,
    jobs: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> Result<(), CliError> {
    let config = load_config(config_path).map_err(CliError::Config)?;
    config.validate().map_err(CliError::Config)?;

    let jobs = jobs
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Experiment(e.to_string()))?;

    let start = Instant::now();
    let outputs = pool
        .install(|| run::execute(&config, seed.unwrap_or(0)))
        .map_err(|e| CliError::Experiment(e.to_string()))?;
    let wall_time_s = start.elapsed().as_secs_f64();

    let meta = json!({
        "tool": "spinsync",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": config.kind.name(),
        "wall_time_s": wall_time_s,
        "jobs": jobs,
        "seed": seed,
    });

    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let io_err = |e: std::io::Error| CliError::Io(format!("{}: {e}", out.display()));
    let mut stage = output::Stage::new();
    stage.write(out, "result.csv", &outputs.csv).map_err(io_err)?;
    stage
        .write(
            out,
            "summary.json",
            &format!(
                "{}\n",
                serde_json::to_string_pretty(&outputs.summary).unwrap()
            ),
        )
        .map_err(io_err)?;
    stage
        .write(
            out,
            "meta.json",
            &format!("{}\n", serde_json::to_string_pretty(&meta).unwrap()),
        )
        .map_err(io_err)?;
    stage.commit().map_err(io_err)?;
    Ok(())
}

fn cmd_validate(config_path: &PathBuf) -> Result<(), CliError> {
    let config = load_config(config_path).map_err(CliError::Config)?;
    config.validate().map_err(CliError::Config)?;
    println!("ok: {} experiment config is valid", config.kind.name());
    Ok(())
}

fn cmd_oracle(oracle: &OracleCommand) -> Result<(), CliError> {
    match oracle {
        OracleCommand::Bessel { n, x } => {
            let v = bessel_j(*n, *x).map_err(|e| CliError::Experiment(e.to_string()))?;
            println!("{v}");
        }
        OracleCommand::Splitting {
            rabi_mhz,
            rf_frequency_mhz,
            rf_amplitude_mhz,
        } => {
            println!(
                "{}",
                dressed_splitting(*rabi_mhz, *rf_frequency_mhz, *rf_amplitude_mhz)
            );
        }
        OracleCommand::Floquet {
            rabi_mhz,
            rf_frequency_mhz,
            rf_amplitude_mhz,
            truncation,
            eigentolerance,
        } => {
            let cfg = FloquetConfig {
                truncation: *truncation,
                eigentolerance: *eigentolerance,
            };
            let (ep, em) =
                floquet_quasienergies(*rabi_mhz, *rf_frequency_mhz, *rf_amplitude_mhz, &cfg)
                    .map_err(|e| CliError::Experiment(e.to_string()))?;
            let gap = quasienergy_gap(*rabi_mhz, *rf_frequency_mhz, *rf_amplitude_mhz, &cfg)
                .map_err(|e| CliError::Experiment(e.to_string()))?;
            println!("{ep} {em} {gap}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            jobs,
            seed,
            out,
        } => cmd_run(config, *jobs, *seed, out),
        Command::Validate { config } => cmd_validate(config),
        Command::Oracle { oracle } => cmd_oracle(oracle),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spinsync: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
