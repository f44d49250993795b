use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use drypool::commands::{
    cmd_analyze, cmd_fund, cmd_ingest, cmd_rates, cmd_simulate, CliError,
};
use drypool::config::{OmegaSource, RunConfig};

/// Rate-making engine for pooled dry-land drought insurance.
#[derive(Parser)]
#[command(name = "drypool", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override the simulation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Drought probability source: a number in (0, 1] or "declarations".
    #[arg(long, global = true, value_name = "FLOAT|declarations")]
    omega: Option<String>,

    /// Override the fund risk-appetite multiplier.
    #[arg(long, global = true)]
    eta: Option<f64>,

    /// Override the government subsidy share (must be at or above the floor).
    #[arg(long, global = true)]
    nu: Option<f64>,

    /// Drop crops with non-positive mean surplus and renormalize the shares.
    #[arg(long, global = true)]
    drop_uninsurable: bool,

    /// Worker threads for the simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the CSV inputs and emit canonical copies.
    Ingest,
    /// Write revenue, expected-profit and effectiveness curves.
    Analyze,
    /// Write the premium/subsidy schedule and quote the configured omega.
    Rates,
    /// Size the buffer fund at the configured risk appetite.
    Fund,
    /// Run the Monte Carlo oracle against the closed forms.
    Simulate,
}

fn apply_overrides(config: &mut RunConfig, cli: &Cli) -> Result<(), CliError> {
    if let Some(dir) = &cli.out {
        config.output.dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        config.sim.seed = seed;
    }
    if let Some(raw) = &cli.omega {
        config.policy.omega = if raw == "declarations" {
            OmegaSource::Declarations
        } else {
            let x: f64 = raw.parse().map_err(|_| {
                CliError::Validation(format!(
                    "--omega must be a number or \"declarations\", got `{raw}`"
                ))
            })?;
            OmegaSource::Fixed(x)
        };
    }
    if let Some(eta) = cli.eta {
        config.policy.eta = eta;
    }
    if let Some(nu) = cli.nu {
        config.policy.nu = Some(nu);
    }
    if cli.drop_uninsurable {
        config.policy.drop_uninsurable = true;
    }
    config.validate().map_err(|e| CliError::Validation(e.to_string()))
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let config_path = cli
        .config
        .clone()
        .ok_or_else(|| CliError::Validation("--config <PATH> is required".to_string()))?;
    let mut config =
        RunConfig::load(&config_path).map_err(|e| CliError::Validation(e.to_string()))?;
    apply_overrides(&mut config, cli)?;

    if let Some(threads) = cli.threads {
        // ignore the error if a global pool already exists (tests, repeats)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }

    match cli.command {
        Command::Ingest => cmd_ingest(&config).map(|s| s.to_string()),
        Command::Analyze => cmd_analyze(&config).map(|s| s.to_string()),
        Command::Rates => cmd_rates(&config).map(|s| s.to_string()),
        Command::Fund => cmd_fund(&config).map(|s| s.to_string()),
        Command::Simulate => cmd_simulate(&config).map(|s| s.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
