//! hartree-lab: batch driver for ground states, propagation, stability
//! experiments and self-verification of the fractional Hartree solver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
//! 4 numerical blow-up, 1 anything else (I/O, failed verification).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "hartree-lab", version, about = "fractional Hartree equation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides output_dir from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the top-level seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the mass-constrained ground state and persist it.
    GroundState(RunArgs),
    /// Propagate an initial state and record conservation traces.
    Evolve(RunArgs),
    /// Run one perturbation experiment against the ground-state orbit.
    Stability(RunArgs),
    /// Run the self-verification suite (inequalities, scaling, shifts).
    Verify {
        /// Run configuration (TOML); defaults to the built-in verification grid.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for verify.json and the config echo (optional).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the top-level seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Deliberately corrupt the Hartree kernel to prove the suite
        /// catches it (expected to fail).
        #[arg(long)]
        corrupt_kernel: bool,
    },
    /// Run a batch of jobs, one output directory per config.
    Sweep {
        /// Sweep description (TOML): command plus a list of run configs.
        #[arg(long)]
        config: PathBuf,
        /// Root output directory; each job writes to <out>/<config stem>.
        #[arg(long)]
        out: PathBuf,
        /// Worker pool size.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn load(args: &RunArgs) -> Result<RunConfig> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::GroundState(args) => {
            commands::cmd_ground_state(&load(&args)?, args.out.as_deref())?;
            Ok(0)
        }
        Command::Evolve(args) => {
            commands::cmd_evolve(&load(&args)?, args.out.as_deref())?;
            Ok(0)
        }
        Command::Stability(args) => {
            commands::cmd_stability(&load(&args)?, args.out.as_deref())?;
            Ok(0)
        }
        Command::Verify {
            config,
            out,
            seed,
            corrupt_kernel,
        } => {
            let mut run_config = match config {
                Some(path) => RunConfig::load(&path)?,
                None => RunConfig::verify_default(),
            };
            if let Some(seed) = seed {
                run_config.seed = seed;
            }
            commands::cmd_verify(&run_config, out.as_deref(), corrupt_kernel)?;
            Ok(0)
        }
        Command::Sweep { config, out, jobs } => commands::cmd_sweep(&config, &out, jobs.max(1)),
    }
}

/// Exit-code contract: configuration and validation problems are 2, solver
/// non-convergence 3, numerical blow-up 4; anything else (I/O, a failed
/// verification suite) is 1.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<config::ConfigError>().is_some() {
            return 2;
        }
        if let Some(core) = cause.downcast_ref::<hartree_lab::Error>() {
            return match core {
                hartree_lab::Error::NonFinite { .. } => 4,
                hartree_lab::Error::NotConverged { .. }
                | hartree_lab::Error::DescentStalled { .. } => 3,
                hartree_lab::Error::Io(_) => 1,
                _ => 2,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err) as u8)
        }
    }
}
