//! Scenario builders shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use thinfilm::params::{validate, DiscParams, MobilityAveraging, ModelParams, RegParams, ValidatedConfig};
use thinfilm::solver::{run, Grid, RunOptions, Trajectory};

pub fn model(n: f64, m: f64, a1: f64, alpha: f64) -> ModelParams {
    ModelParams { n, m, a1, alpha, beta_ent: 0.0, kappa: None }
}

/// Config on `(-pi, pi)` with a fixed step `dt` once the start-up ramp is
/// over.
pub fn config(model: ModelParams, reg: RegParams, cells: usize, t_end: f64, dt_max: f64) -> ValidatedConfig {
    let mut disc = DiscParams::new(PI, cells, t_end);
    disc.dt0 = dt_max.min(1e-4);
    disc.dt_max = dt_max;
    validate(model, reg, disc).expect("test config is valid")
}

pub fn with_averaging(cfg: &ValidatedConfig, averaging: MobilityAveraging) -> ValidatedConfig {
    let mut disc = *cfg.disc();
    disc.mobility_averaging = averaging;
    validate(*cfg.model(), *cfg.reg(), disc).unwrap()
}

/// `1 + amp cos(k pi x / a)` sampled on the config's grid.
pub fn cosine(cfg: &ValidatedConfig, mean: f64, amp: f64, k: f64) -> Vec<f64> {
    let a = cfg.disc().a;
    Grid::new(a, cfg.disc().cells).sample(|x| mean + amp * (k * PI * x / a).cos())
}

pub fn simulate(cfg: &ValidatedConfig, h0: &[f64]) -> Trajectory {
    let opts = RunOptions { snapshot_every: 0, ..RunOptions::default() };
    let traj = run(cfg, h0, opts, &mut []).expect("run succeeds");
    assert!(traj.aborted.is_none(), "run aborted: {:?}", traj.aborted);
    traj
}
