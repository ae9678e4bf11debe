//! The five subcommands. Each returns an [`Outcome`] that `main` maps to an
//! exit code.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use thinfilm::estimates::{check_growth_bound, check_monotone_energy, decay_diagnostic, BoundReport};
use thinfilm::io;
use thinfilm::laugesen::{self, identity_suite, region_point, region_scan};
use thinfilm::params::{content_hash, Config, DiscParams, ModelParams, RegParams, ValidatedConfig};
use thinfilm::solver::{run, Grid, RunOptions, SolverError, Trajectory};
use thinfilm::FunctionalRecord;

use crate::initial::InitialData;
use crate::rundir::{Staged, METADATA};

pub const GIT_HASH: &str = env!("THINFILM_GIT_HASH");

/// Non-error results that still carry a verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Ok,
    IdentityFailure(String),
    StepFloor(String),
}

/// Problems with the user's inputs, reported with exit code 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(e: impl std::fmt::Display) -> anyhow::Error {
    Invalid(e.to_string()).into()
}

/// Options shared by the run-producing subcommands.
#[derive(Debug, Clone)]
pub struct RunArgs {
    pub config: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub h0: InitialData,
    pub snapshot_every: usize,
    pub binary: bool,
    pub force: bool,
    pub seed: u64,
}

/// Stable demonstration defaults: thin film with `a1 = 0`, `n = 1`,
/// `alpha = 0.2`.
pub fn demo_config() -> Config {
    Config {
        model: ModelParams { n: 1.0, m: 2.0, a1: 0.0, alpha: 0.2, beta_ent: 0.0, kappa: None },
        reg: RegParams::default(),
        disc: DiscParams { dt_max: 1e-2, ..DiscParams::new(std::f64::consts::PI, 256, 1.0) },
    }
}

/// Long stable run used by `decay`.
pub fn decay_config() -> Config {
    Config {
        model: ModelParams { n: 2.0, m: 2.0, a1: 0.0, alpha: -0.5, beta_ent: 0.0, kappa: None },
        reg: RegParams::default(),
        disc: DiscParams { dt_max: 5e-2, ..DiscParams::new(std::f64::consts::PI, 256, 10.0) },
    }
}

pub fn load_config(path: Option<&Path>, defaults: Config, overrides: &[String]) -> Result<ValidatedConfig> {
    let base = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Config::from_toml_str(&text).map_err(invalid)?
        }
        None => defaults,
    };
    let cfg = base.with_overrides(overrides).map_err(invalid)?;
    thinfilm::validate(cfg.model, cfg.reg, cfg.disc).map_err(invalid)
}

#[derive(Serialize)]
struct GridInfo {
    a: f64,
    cells: usize,
    dx: f64,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    config_hash: &'a str,
    git_hash: &'a str,
    version: &'a str,
    command: &'a str,
    seed: u64,
    initial_data: String,
    grid: GridInfo,
    warnings: &'a [String],
    steps: usize,
    rejected_steps: usize,
    final_time: f64,
    jacobian_error: Option<f64>,
    initial_mass: f64,
    final_mass: f64,
    relative_mass_drift: f64,
    aborted: Option<&'a thinfilm::solver::Abort>,
    wall_time_s: f64,
}

/// Summary of one finished run, used by `sweep`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub steps: usize,
    pub final_time: f64,
    pub final_energy: f64,
    pub relative_mass_drift: f64,
    pub violations: Option<usize>,
    pub aborted: bool,
}

fn bound_report(traj: &Trajectory, model: &ModelParams) -> serde_json::Result<(serde_json::Value, Option<usize>)> {
    let report: Result<BoundReport, _> =
        if model.a1 <= 0.0 { check_monotone_energy(traj, model) } else { check_growth_bound(traj, model) };
    Ok(match report {
        Ok(r) => {
            let v = r.violations;
            (serde_json::to_value(r)?, Some(v))
        }
        Err(e) => (json!({ "error": e.to_string() }), None),
    })
}

fn csv_comments(hash: &str) -> [(&'static str, &str); 2] {
    [("config_hash", hash), ("git_hash", GIT_HASH)]
}

fn write_run_files(
    staged: &Staged,
    cfg: &ValidatedConfig,
    traj: &Trajectory,
    binary: bool,
) -> Result<Option<usize>> {
    let hash = staged.hash().to_string();
    staged.write_text("config.toml", &format!("# config_hash: {hash}\n{}", cfg.to_toml_string()))?;
    if binary {
        let mut out = staged.create("trajectory.bin")?;
        io::write_trajectory_binary(&mut out, &traj.snapshots)?;
        out.flush()?;
    } else {
        let mut out = staged.create("trajectory.csv")?;
        io::write_comments(&mut out, &csv_comments(&hash))?;
        io::write_trajectory_csv(&mut out, &traj.snapshots)?;
        out.flush()?;
    }
    let mut out = staged.create("functionals.csv")?;
    io::write_comments(&mut out, &csv_comments(&hash))?;
    io::write_functionals_csv(&mut out, &traj.records)?;
    out.flush()?;

    let mut out = staged.create("functionals.jsonl")?;
    serde_json::to_writer(&mut out, &json!({ "config_hash": hash, "columns": FunctionalRecord::COLUMNS }))?;
    writeln!(out)?;
    io::write_json_lines(&mut out, &traj.records)?;
    out.flush()?;

    let (report, violations) = bound_report(traj, cfg.model())?;
    staged.write_json("bound_report.json", &json!({ "config_hash": hash, "report": report }))?;
    Ok(violations)
}

/// Runs one configuration into `out`; shared by `simulate`, `decay` and
/// `sweep`.
pub fn run_into(
    out: &Path,
    cfg: &ValidatedConfig,
    args: &RunArgs,
    command: &str,
    extra: impl FnOnce(&Staged, &Trajectory) -> Result<()>,
) -> Result<(RunSummary, Outcome)> {
    let hash = cfg.hash();
    let staged = Staged::begin(out, &hash, args.force)?;
    let disc = cfg.disc();
    let grid = Grid::new(disc.a, disc.cells);
    let h0 = args.h0.sample(&grid).map_err(invalid)?;
    let opts = RunOptions { snapshot_every: args.snapshot_every, ..RunOptions::default() };

    let start = Instant::now();
    let traj = match run(cfg, &h0, opts, &mut []) {
        Ok(t) => t,
        Err(e @ (SolverError::NegativeInitialData { .. } | SolverError::SizeMismatch { .. })) => {
            return Err(invalid(e))
        }
        Err(SolverError::NonPositiveHeight { index, value }) => {
            return Err(invalid(format!(
                "initial height {value} at cell {index} is not positive; set reg.eps > 0 to lift touching-down data"
            )))
        }
        Err(e) => return Err(e.into()),
    };
    let wall = start.elapsed().as_secs_f64();

    let violations = write_run_files(&staged, cfg, &traj, args.binary)?;
    extra(&staged, &traj)?;
    let first = traj.records.first().expect("initial record");
    let last = traj.records.last().expect("final record");
    let meta = RunMetadata {
        config_hash: &hash,
        git_hash: GIT_HASH,
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: args.seed,
        initial_data: format!("{:?}", args.h0),
        grid: GridInfo { a: grid.a, cells: grid.cells, dx: grid.dx() },
        warnings: cfg.warnings(),
        steps: traj.steps.len(),
        rejected_steps: traj.rejected_steps,
        final_time: last.t,
        jacobian_error: traj.jacobian_error,
        initial_mass: first.mass,
        final_mass: last.mass,
        relative_mass_drift: traj.relative_mass_drift(),
        aborted: traj.aborted.as_ref(),
        wall_time_s: wall,
    };
    staged.write_json(METADATA, &meta)?;
    staged.commit()?;

    let summary = RunSummary {
        config_hash: hash,
        steps: traj.steps.len(),
        final_time: last.t,
        final_energy: last.e0_alpha,
        relative_mass_drift: traj.relative_mass_drift(),
        violations,
        aborted: traj.aborted.is_some(),
    };
    let outcome = match &traj.aborted {
        Some(a) => Outcome::StepFloor(format!("step size fell below dt_min at t = {}: {}", a.t, a.reason)),
        None => Outcome::Ok,
    };
    Ok((summary, outcome))
}

pub fn simulate(out: &Path, args: &RunArgs) -> Result<Outcome> {
    let cfg = load_config(args.config.as_deref(), demo_config(), &args.overrides)?;
    let (summary, outcome) = run_into(out, &cfg, args, "simulate", |_, _| Ok(()))?;
    println!(
        "{}: {} steps to t = {}, energy {:.6e}, mass drift {:.1e}",
        out.display(),
        summary.steps,
        summary.final_time,
        summary.final_energy,
        summary.relative_mass_drift
    );
    Ok(outcome)
}

pub fn decay(out: &Path, args: &RunArgs) -> Result<Outcome> {
    let cfg = load_config(args.config.as_deref(), decay_config(), &args.overrides)?;
    if cfg.model().a1 > 0.0 {
        return Err(invalid("decay needs a1 <= 0"));
    }
    let model = *cfg.model();
    let hash = cfg.hash();
    let mut line = String::new();
    let (_, outcome) = run_into(out, &cfg, args, "decay", |staged, traj| {
        match decay_diagnostic(traj, &model) {
            Ok(fit) => {
                line = format!("decay exponent p = {} (C = {:.3e}), passes: {}", fit.p, fit.c, fit.passes);
                staged.write_json("decay_report.json", &json!({ "config_hash": hash, "fit": fit }))
            }
            Err(e) => {
                line = format!("decay fit unavailable: {e}");
                staged.write_json("decay_report.json", &json!({ "config_hash": hash, "error": e.to_string() }))
            }
        }
    })?;
    println!("{line}");
    Ok(outcome)
}

/// `key=v1,v2,...` axes of a sweep.
pub fn parse_axis(spec: &str) -> Result<(String, Vec<String>)> {
    let (key, values) = spec.split_once('=').ok_or_else(|| invalid(format!("expected key=v1,v2,..., got `{spec}`")))?;
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(invalid(format!("axis `{key}` has no values")));
    }
    Ok((key.trim().to_string(), values))
}

/// Cartesian product of the axes, last axis fastest.
pub fn product(axes: &[(String, Vec<String>)]) -> Vec<Vec<String>> {
    axes.iter().fold(vec![Vec::new()], |acc, (key, values)| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push(format!("{key}={v}"));
                    next
                })
            })
            .collect()
    })
}

pub fn sweep(out: &Path, args: &RunArgs, axes: &[String]) -> Result<Outcome> {
    let axes: Vec<(String, Vec<String>)> = axes.iter().map(|a| parse_axis(a)).collect::<Result<_>>()?;
    let points = product(&axes);
    // validate everything before starting any run
    let configs: Vec<ValidatedConfig> = points
        .iter()
        .map(|p| {
            let mut all = args.overrides.clone();
            all.extend(p.iter().cloned());
            load_config(args.config.as_deref(), demo_config(), &all)
        })
        .collect::<Result<_>>()?;
    let joined: Vec<String> = configs.iter().map(|c| c.hash()).collect();
    let hash = content_hash(&joined.join("\n"));
    let staged = Staged::begin(out, &hash, args.force)?;
    let member_args = RunArgs { force: true, ..args.clone() };

    let results: Vec<Result<(RunSummary, Outcome)>> = configs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| run_into(&staged.path(&format!("run-{i:03}")), cfg, &member_args, "sweep", |_, _| Ok(())))
        .collect();

    let mut table = staged.create("sweep.csv")?;
    io::write_comments(&mut table, &csv_comments(&hash))?;
    writeln!(table, "run,overrides,config_hash,steps,final_time,final_energy,relative_mass_drift,violations,aborted")?;
    let mut outcome = Outcome::Ok;
    for (i, (point, result)) in points.iter().zip(results).enumerate() {
        let (s, o) = result.with_context(|| format!("sweep run {i} ({})", point.join(" ")))?;
        writeln!(
            table,
            "run-{i:03},{},{},{},{},{},{},{},{}",
            point.join(" "),
            s.config_hash,
            s.steps,
            s.final_time,
            s.final_energy,
            s.relative_mass_drift,
            s.violations.map(|v| v.to_string()).unwrap_or_default(),
            s.aborted as u8
        )?;
        if outcome == Outcome::Ok && o != Outcome::Ok {
            outcome = o;
        }
    }
    table.flush()?;
    drop(table);
    staged.write_json(
        METADATA,
        &json!({
            "config_hash": hash,
            "git_hash": GIT_HASH,
            "command": "sweep",
            "runs": points.len(),
            "axes": axes.iter().map(|(k, v)| json!({ "key": k, "values": v })).collect::<Vec<_>>(),
        }),
    )?;
    staged.commit()?;
    println!("{}: {} runs", out.display(), points.len());
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct RegionArgs {
    pub n_range: (f64, f64),
    pub alpha_range: (f64, f64),
    pub resolution: (usize, usize),
    pub force: bool,
}

pub fn region_query(n: f64, alpha: f64) -> Result<Outcome> {
    println!("{}", serde_json::to_string_pretty(&region_point(n, alpha))?);
    Ok(Outcome::Ok)
}

pub fn region(out: &Path, args: &RegionArgs) -> Result<Outcome> {
    let descriptor = format!(
        "region n={:?},{:?} alpha={:?},{:?} res={}x{}",
        args.n_range.0, args.n_range.1, args.alpha_range.0, args.alpha_range.1, args.resolution.0, args.resolution.1
    );
    let hash = content_hash(&descriptor);
    let scan = region_scan(args.n_range, args.alpha_range, args.resolution).map_err(invalid)?;
    let staged = Staged::begin(out, &hash, args.force)?;
    let comments = csv_comments(&hash);

    let mut f = staged.create("region.csv")?;
    io::write_comments(&mut f, &comments)?;
    io::write_region_csv(&mut f, &scan)?;
    f.flush()?;
    let mut f = staged.create("boundary.csv")?;
    io::write_comments(&mut f, &comments)?;
    io::write_polyline_csv(&mut f, &scan.boundary)?;
    f.flush()?;
    let mut f = staged.create("reference.csv")?;
    io::write_comments(&mut f, &comments)?;
    io::write_polyline_csv(&mut f, &scan.reference_line)?;
    f.flush()?;
    drop(f);
    staged.write_text(
        "region.gp",
        &format!("# config_hash: {hash}\n{}", io::gnuplot_script("region.csv", "boundary.csv", "reference.csv")),
    )?;

    let feasible = scan.feasible_count();
    let outside_theorem = scan.points.iter().filter(|p| p.feasible && !p.in_theorem_range).count();
    let marginal = scan.points.iter().filter(|p| p.marginal).count();
    let summary = json!({
        "config_hash": hash,
        "git_hash": GIT_HASH,
        "command": "region",
        "descriptor": descriptor,
        "points": scan.points.len(),
        "feasible": feasible,
        "marginal": marginal,
        "feasible_outside_theorem_range": outside_theorem,
        "mu_counterexamples": scan.mu_counterexamples().len(),
        "marginal_width": laugesen::MARGINAL_WIDTH,
    });
    staged.write_json(METADATA, &summary)?;
    staged.commit()?;
    println!("{}: {feasible} of {} points feasible", out.display(), scan.points.len());
    Ok(Outcome::Ok)
}

pub fn verify(out: Option<&Path>, seed: u64, profiles: usize, force: bool) -> Result<Outcome> {
    let report = identity_suite(seed, profiles)?;
    let hash = content_hash(&format!("verify seed={seed} profiles={profiles}"));
    if let Some(out) = out {
        let staged = Staged::begin(out, &hash, force)?;
        staged.write_json("identity_report.json", &json!({ "config_hash": hash, "report": report }))?;
        staged.write_json(
            METADATA,
            &json!({ "config_hash": hash, "git_hash": GIT_HASH, "command": "verify", "seed": seed, "profiles": profiles }),
        )?;
        staged.commit()?;
    }
    println!(
        "{} cases: max residual {:.2e} (tol {:e}), min doubling shrink {:.1}, eps slope {:.4} (expected {:.4})",
        report.cases.len(),
        report.max_residual,
        report.tolerance,
        report.min_shrink,
        report.eps_sweep.slope,
        report.eps_sweep.expected
    );
    Ok(match report.first_failure {
        Some(f) => Outcome::IdentityFailure(f),
        None => Outcome::Ok,
    })
}
