use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plasmon_cli::{run, CliError, ScenarioConfig, DEFAULT_CONFIG_TOML};

/// Emitter dynamics above a Drude metal surface with quantum surface corrections.
#[derive(Debug, Parser)]
#[command(name = "plasmon", version)]
struct Cli {
    /// Scenario file (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for the spectral table build.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Print the documented default configuration and exit.
    #[arg(long)]
    print_default_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectral density table and peak report.
    Spectral,
    /// Bound states and their existence thresholds.
    Spectrum,
    /// Amplitude trajectory and decay rates (any N).
    Dynamics,
    /// Two-emitter concurrence and its long-time prediction.
    Concurrence,
    /// Quick oracle checks of the numerics.
    Selftest,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if cli.print_default_config {
        print!("{DEFAULT_CONFIG_TOML}");
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config("no subcommand given (see --help)".into()));
    };
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
    }
    let cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    let out = cli.out.unwrap_or_else(|| cfg.output.dir.clone());
    let results = match command {
        Command::Spectral => run::run_spectral(&cfg, &out)?,
        Command::Spectrum => run::run_spectrum(&cfg, &out)?,
        Command::Dynamics => run::run_dynamics(&cfg, &out)?,
        Command::Concurrence => run::run_concurrence(&cfg, &out)?,
        Command::Selftest => run::run_selftest(&cfg, &out)?,
    };
    let text = serde_json::to_string_pretty(&results).map_err(|e| CliError::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
