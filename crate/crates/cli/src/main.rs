//! Batch front end for the reconstruction pipeline.
//!
//! Exit codes: 0 success, 1 computation or verification failure,
//! 2 usage or configuration error.

mod commands;
mod config;
mod output;
mod sampled;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Outcome, UsageError};
use config::RunConfig;

const KEYS: &str = "\
Every key of the config file can be set with `--key value` (TOML syntax,
e.g. `--u \"[1, 0, 0]\"`; bare words are strings). Keys:
  seed format output input
  family c u beta q sigma odd_perturbation odd_tol
  points point planes p_max plane_list oracle
  suite suite_planes suite_oracle_planes suite_samples
  l_max delta n_phi phi_offset c_norm include_normal_term richardson
  alpha_sequence disc_rings disc_azimuths oracle_step oracle_tol";

#[derive(Parser)]
#[command(name = "crofton-cli", version, about = "Crofton densities from projective metrics", after_help = KEYS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `--key value` overrides of config keys.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0.., value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the metric H(x, Ω) of the synthetic density on a grid.
    Forward(Common),
    /// Solve the zonoid equation at one point.
    Zonoid(Common),
    /// Reconstruct the density on a list of planes.
    Reconstruct(Common),
    /// Run a verification suite.
    Verify(Common),
    /// Fit the normalization constant on a constant density.
    Calibrate(Common),
}

/// `--config` may also appear among the overrides.
fn split_config(common: Common) -> (Option<PathBuf>, Vec<String>) {
    let mut path = common.config;
    let mut rest = Vec::new();
    let mut it = common.overrides.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = it.next().map(PathBuf::from);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    (path, rest)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common, run): (&str, Common, fn(&RunConfig) -> anyhow::Result<Outcome>) = match cli.command {
        Command::Forward(c) => ("forward", c, commands::forward),
        Command::Zonoid(c) => ("zonoid", c, commands::zonoid),
        Command::Reconstruct(c) => ("reconstruct", c, commands::reconstruct),
        Command::Verify(c) => ("verify", c, commands::verify),
        Command::Calibrate(c) => ("calibrate", c, commands::calibrate),
    };
    let (path, overrides) = split_config(common);
    let cfg = match RunConfig::load(path.as_ref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {name}: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {name}: {e:#}");
            ExitCode::from(1)
        }
    }
}
