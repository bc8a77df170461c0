use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jcm_cli::{cmd_criteria, cmd_measure, cmd_oracle_check, cmd_pfunc, CliError, MethodChoice, RunConfig, Shots};

/// Trapped-ion Jaynes-Cummings simulator.
///
/// Exit status: 0 success, 1 oracle check failed, 2 configuration or output
/// error, 3 ill-conditioned probe design, 4 truncation or domain error.
#[derive(Parser)]
#[command(name = "jcm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed (overrides run.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// P-function method (overrides filter.method).
    #[arg(long, global = true, value_parser = clap::value_parser!(MethodChoice))]
    method: Option<MethodChoice>,
    /// Shot budget per probe point, or `ideal` (overrides measurement.shots).
    #[arg(long, global = true, value_parser = clap::value_parser!(Shots))]
    shots: Option<Shots>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Nonclassicality criteria along the time scan (criteria.csv).
    Criteria,
    /// Regularized P function at snapshot.t (pfunc.json).
    Pfunc,
    /// Simulated probe reconstruction at snapshot.t.
    Measure,
    /// Analytic motional state against dense propagation.
    OracleCheck,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(|e| match e {
                CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
                other => other,
            })?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.directory = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(m) = cli.method {
        cfg.filter.method = m;
    }
    if let Some(s) = cli.shots {
        cfg.measurement.shots = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    let outcome = match cli.command {
        Command::Criteria => cmd_criteria(&cfg)?,
        Command::Pfunc => cmd_pfunc(&cfg)?,
        Command::Measure => cmd_measure(&cfg)?,
        Command::OracleCheck => cmd_oracle_check(&cfg)?,
    };
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    println!("{}", outcome.summary);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
