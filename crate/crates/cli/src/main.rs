//! `autofits` — feature extraction and forecasting for unevenly spaced
//! time series.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{CliError, Overrides};

#[derive(Parser)]
#[command(
    name = "autofits",
    about = "Feature extraction and forecasting for unevenly spaced time series",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file (TOML-style key = value with sections).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the command's primary output path.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Worker threads (default: logical core count).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Override the config's RNG seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Override the config's variant.
    #[arg(long, global = true, value_name = "VARIANT", value_parser = ["baseline", "autofits", "merged"])]
    variant: Option<String>,

    /// External feature bundle CSV (entity_id,target_time,<feature...>).
    #[arg(long, global = true, value_name = "PATH")]
    external_features: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the feature-matrix CSV for the configured variant.
    Extract,
    /// Train on all rows and forecast the next value per entity.
    Forecast,
    /// Run the frequency sweep and write the report and win summary.
    Sweep,
    /// Print per-entity data checks without writing anything.
    Validate,
}

fn try_run(cli: &Cli) -> Result<i32, CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".to_string()))?;

    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".to_string()));
        }
        // ignore the error if a pool already exists (tests call run twice)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    let overrides = Overrides {
        seed: cli.seed,
        variant: cli
            .variant
            .as_deref()
            .map(|v| v.parse().map_err(CliError::from))
            .transpose()?,
        external_features: cli.external_features.clone(),
    };
    let config = config::load_config(config_path, &overrides)?;

    match cli.command {
        Command::Extract => commands::cmd_extract(&config, cli.output.as_deref()),
        Command::Forecast => commands::cmd_forecast(&config, cli.output.as_deref()),
        Command::Sweep => commands::cmd_sweep(&config, cli.output.as_deref()),
        Command::Validate => commands::cmd_validate(&config),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match try_run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
