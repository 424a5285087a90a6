//! `wedgespace`: weighted norms and the Mellin Poisson solver from the shell.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Defaults, Resolved, RunConfig};
use error::{CliError, CliResult};

/// Environment variable holding the worker thread count.
const THREADS_VAR: &str = "WEDGESPACE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "wedgespace", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat JSON file with any of the keys below; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    keys: RunConfig,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Compare the four norm definitions over a field family
    Norms,
    /// Solve the Dirichlet Poisson problem for one forcing
    Solve,
    /// Dirichlet eigenvalues of the angular operator
    Spectrum,
    /// Round-trip, Parseval and multiplier checks of the Mellin transform
    MellinSelftest,
    /// Grid-refinement study on a manufactured solution
    Convergence,
}

impl Command {
    fn defaults(self) -> Defaults {
        match self {
            Command::Convergence => Defaults { n_s: 256, n_phi: 32 },
            _ => Defaults::default(),
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(THREADS_VAR, format!("need a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(THREADS_VAR, e.to_string()))
}

fn run(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let file = match &cli.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    let cfg = Resolved::from_config(&file.overlaid(&cli.keys), cli.command.defaults())?;
    configure_threads()?;
    let mut out = commands::Outputs::new(&cfg.out_dir)?;
    match cli.command {
        Command::Norms => commands::cmd_norms(&cfg, &mut out)?,
        Command::Solve => commands::cmd_solve(&cfg, &mut out)?,
        Command::Spectrum => commands::cmd_spectrum(&cfg, &mut out)?,
        Command::MellinSelftest => commands::cmd_mellin_selftest(&cfg, &mut out)?,
        Command::Convergence => commands::cmd_convergence(&cfg, &mut out)?,
    }
    Ok(out.written().to_vec())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
