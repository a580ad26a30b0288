use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sairs::commands::{run_command, Command};
use sairs::config::{parse_config, Overrides};
use sairs::error::{CliError, Result};
use sairs::verify;
use sairs_core::control::ProjectionMode;

/// Stochastic SAIRS epidemic model with saturated incidence.
#[derive(Debug, Parser)]
#[command(name = "sairs", version)]
struct Args {
    command: Command,

    /// TOML run configuration (not needed by `verify`).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed; overrides `ensemble.master_seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Ensemble size; overrides `ensemble.n_traj`.
    #[arg(long)]
    trajectories: Option<usize>,

    /// Overrides `grid.t_end`.
    #[arg(long)]
    t_end: Option<f64>,

    /// Overrides `grid.dt`.
    #[arg(long)]
    dt: Option<f64>,

    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Control projection; overrides `control.sweep.mode`.
    #[arg(long, value_parser = ["classic", "hamiltonian"])]
    mode: Option<String>,
}

fn run(args: Args) -> Result<()> {
    if args.command == Command::Verify {
        let mut failed = Vec::new();
        for outcome in verify::run_all()? {
            println!("{outcome}");
            if !outcome.pass {
                failed.push(outcome.id);
            }
        }
        return if failed.is_empty() {
            Ok(())
        } else {
            Err(CliError::VerifyFailed { failed })
        };
    }
    let path = args
        .config
        .ok_or_else(|| CliError::Usage(format!("`{}` needs --config <path>", args.command)))?;
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let overrides = Overrides {
        seed: args.seed,
        trajectories: args.trajectories,
        t_end: args.t_end,
        dt: args.dt,
        out: args.out,
        mode: args.mode.as_deref().and_then(ProjectionMode::parse),
    };
    let cfg = parse_config(&text, &overrides)?;
    let report = run_command(args.command, &cfg)?;
    print!("{}", report.render());
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
