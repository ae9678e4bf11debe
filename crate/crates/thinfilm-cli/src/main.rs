//! `thinfilm`: simulations, region scans and identity checks from the
//! command line.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid input or a refused
//! overwrite, 3 identity check failed, 4 a run stopped at the step floor.

mod commands;
mod initial;
mod rundir;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::{Invalid, Outcome, RegionArgs, RunArgs};
use initial::InitialData;
use rundir::HashMismatch;

#[derive(Parser)]
#[command(name = "thinfilm", version, about = "Regularized thin-film equation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML config with [model], [reg] and [disc] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override a config value, e.g. `--set model.alpha=0.1`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Seed for randomized checks; recorded with every run.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replace an output directory produced from different inputs.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Initial data: constant:C, cosine:C,A,K, bump:C,W or file:PATH.
    #[arg(long, default_value = "cosine:1,0.5,1")]
    h0: String,
    /// Keep every K-th accepted state; 0 keeps only the first and last.
    #[arg(long, default_value_t = 1)]
    snapshot_every: usize,
    /// Write the trajectory as little-endian binary instead of CSV.
    #[arg(long)]
    binary: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write its run directory.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Rasterize the (n, alpha) dissipation region, or query one point.
    Region {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "LO,HI", default_value = "0.4,3.1")]
        n_range: String,
        #[arg(long, value_name = "LO,HI", default_value = "-1,1")]
        alpha_range: String,
        /// Grid resolution as NxM.
        #[arg(long, default_value = "271x201")]
        res: String,
        /// Print the verdict for a single `n,alpha` point instead.
        #[arg(long, value_name = "N,ALPHA")]
        point: Option<String>,
    },
    /// Check the integration-by-parts and sum-of-squares identities.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Number of random profiles besides 2 + sin x.
        #[arg(long, default_value_t = 20)]
        profiles: usize,
        /// Print only; do not write an output directory.
        #[arg(long)]
        no_out: bool,
    },
    /// Long stable run with a power-law fit of the decay to the mean.
    Decay {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Independent runs over a product of parameter values, in parallel.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunFlags,
        /// Axis `key=v1,v2,...`; repeat for a Cartesian product.
        #[arg(long = "vary", value_name = "KEY=V1,V2,...", required = true)]
        axes: Vec<String>,
    },
}

fn pair<T: std::str::FromStr>(text: &str, sep: char, what: &str) -> Result<(T, T)>
where
    T::Err: std::fmt::Display,
{
    let (a, b) = text.split_once(sep).ok_or_else(|| Invalid(format!("{what}: expected A{sep}B, got `{text}`")))?;
    let parse = |s: &str| s.trim().parse::<T>().map_err(|e| Invalid(format!("{what}: `{s}`: {e}")));
    Ok((parse(a)?, parse(b)?))
}

fn run_args(common: &Common, run: &RunFlags) -> Result<RunArgs> {
    let h0: InitialData = run.h0.parse().map_err(|e: anyhow::Error| Invalid(e.to_string()))?;
    Ok(RunArgs {
        config: common.config.clone(),
        overrides: common.overrides.clone(),
        h0,
        snapshot_every: run.snapshot_every,
        binary: run.binary,
        force: common.force,
        seed: common.seed,
    })
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Simulate { common, run } => commands::simulate(&common.out, &run_args(&common, &run)?),
        Command::Decay { common, run } => commands::decay(&common.out, &run_args(&common, &run)?),
        Command::Sweep { common, run, axes } => commands::sweep(&common.out, &run_args(&common, &run)?, &axes),
        Command::Region { common, n_range, alpha_range, res, point } => {
            if let Some(p) = point {
                let (n, alpha) = pair::<f64>(&p, ',', "--point")?;
                return commands::region_query(n, alpha);
            }
            let args = RegionArgs {
                n_range: pair(&n_range, ',', "--n-range")?,
                alpha_range: pair(&alpha_range, ',', "--alpha-range")?,
                resolution: pair(&res, 'x', "--res")?,
                force: common.force,
            };
            commands::region(&common.out, &args)
        }
        Command::Verify { common, profiles, no_out } => {
            let out = (!no_out).then_some(common.out.as_path());
            commands::verify(out, common.seed, profiles, common.force)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Invalid>().is_some() || err.downcast_ref::<HashMismatch>().is_some() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::IdentityFailure(name)) => {
            eprintln!("identity check failed: {name}");
            ExitCode::from(3)
        }
        Ok(Outcome::StepFloor(msg)) => {
            eprintln!("run aborted: {msg}");
            ExitCode::from(4)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
