use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use phasemix_cli::commands::{cmd_concavity_map, cmd_simulate, cmd_sweep};
use phasemix_cli::config::RunConfig;
use phasemix_cli::output::OutDir;
use phasemix_cli::verify::{report, run_checks, Outcome};
use phasemix_cli::CliError;

#[derive(Parser)]
#[command(name = "phasemix", version, about = "Linear stability and transient runs for binary mixture models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Dispersion sweep over a wavenumber grid.
    Sweep(Common),
    /// Hessian classification of the Peng-Robinson energy on a density grid.
    ConcavityMap(Common),
    /// Transient 1D run with growth-rate fits.
    Simulate(Common),
    /// Invariant checks for the configured model.
    Verify(Common),
}

fn execute(cli: Cli) -> Result<String, CliError> {
    let (Command::Sweep(c) | Command::ConcavityMap(c) | Command::Simulate(c) | Command::Verify(c)) = &cli.command;
    let Format::Csv = c.format;
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let config = RunConfig::from_path(&c.config)?;
    let out = OutDir::create(&c.out)?;
    out.write("config.normalized.toml", &config.echo())?;
    match &cli.command {
        Command::Sweep(_) => cmd_sweep(&config, &out),
        Command::ConcavityMap(_) => cmd_concavity_map(&config, &out),
        Command::Simulate(_) => cmd_simulate(&config, &out),
        Command::Verify(_) => {
            let checks = run_checks(&config)?;
            let text = report(&checks);
            out.write("verify.txt", &text)?;
            print!("{text}");
            let failed = checks.iter().filter(|c| c.outcome == Outcome::Fail).count();
            if failed > 0 {
                return Err(CliError::VerifyFailed(failed));
            }
            Ok(String::new())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("phasemix: {e}");
            e.exit_code()
        }
    }
}
