//! Command-line driver: reads an experiment config, runs one analysis and
//! writes CSV.

mod commands;
mod config;
mod error;
mod presets;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "netpk", version, about = "Hitting probabilities of network-coupled compound Poisson processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use a named preset instead of a config file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Output CSV path (default: run.output, else standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Monte Carlo paths or draws.
    #[arg(long)]
    paths: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Law of P^Q.
    PkDist(Common),
    /// Moments of P^Q, unconditional and given deg(Q) > 0.
    PkMoments(Common),
    /// Hitting probability of the group sum.
    HitSum(Common),
    /// Hitting probability of each group member on its own.
    HitSingle(Common),
    /// Bounds on simultaneous hitting by all group members.
    HitJointBounds(Common),
    /// Lundberg-type bounds.
    Lundberg(Common),
    /// Poisson surrogates and delta-method approximations.
    PoissonApprox(Common),
    /// The sixteen configurations of a 2x2 network.
    TwoByTwo(Common),
    /// Monte Carlo estimates for the configured target.
    Simulate(Common),
    /// Data behind the figures: fig2, fig3-left, fig3-right, fig4, fig5.
    Figures {
        name: String,
        /// Comma-separated edge probabilities replacing the default sweep.
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List presets, or print one as TOML.
    Presets {
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(c: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&c.config, &c.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            ExperimentConfig::parse(&text, std::env::vars())
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => {
            let base = presets::preset(name).ok_or_else(|| {
                CliError::Validation(format!("unknown preset {name:?}; choose one of {}", presets::NAMES.join(", ")))
            })?;
            ExperimentConfig::parse(&base.to_toml(), std::env::vars())?
        }
        (None, None) => return Err(CliError::Validation("pass --config PATH or --preset NAME".into())),
    };
    if let Some(s) = c.seed {
        cfg.run.seed = s;
    }
    if let Some(t) = c.tol {
        cfg.query.tol = t;
    }
    if let Some(n) = c.paths {
        cfg.run.n_paths = n;
    }
    Ok(cfg)
}

fn set_threads(n: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Numeric(e.to_string()))?;
    }
    Ok(())
}

fn emit(table: &commands::Table, out: Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => table.write(fs::File::create(path)?),
        None => table.write(std::io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, f): (Common, fn(&ExperimentConfig) -> Result<commands::Table, CliError>) = match cli.command {
        Command::PkDist(c) => (c, commands::pk_dist),
        Command::PkMoments(c) => (c, commands::pk_moments),
        Command::HitSum(c) => (c, commands::hit_sum),
        Command::HitSingle(c) => (c, commands::hit_single),
        Command::HitJointBounds(c) => (c, commands::hit_joint_bounds),
        Command::Lundberg(c) => (c, commands::lundberg),
        Command::PoissonApprox(c) => (c, commands::poisson_approx),
        Command::TwoByTwo(c) => (c, commands::two_by_two),
        Command::Simulate(c) => (c, commands::simulate),
        Command::Figures { name, p_grid, out, threads } => {
            set_threads(threads)?;
            return emit(&commands::figures(&name, p_grid)?, out);
        }
        Command::Presets { name, out } => {
            let text = match name {
                None => presets::NAMES.iter().map(|n| format!("{n}\n")).collect::<String>(),
                Some(n) => presets::preset(&n)
                    .ok_or_else(|| CliError::Validation(format!("unknown preset {n:?}")))?
                    .to_toml(),
            };
            match out {
                Some(p) => fs::write(p, text)?,
                None => std::io::stdout().lock().write_all(text.as_bytes())?,
            }
            return Ok(());
        }
    };
    set_threads(common.threads)?;
    let cfg = load(&common)?;
    let out = common.out.clone().or_else(|| cfg.run.output.as_ref().map(PathBuf::from));
    emit(&f(&cfg)?, out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
