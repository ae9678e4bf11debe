//! Empirical checks of the alpha-energy bounds, the interpolation exponent
//! bookkeeping and the long-time decay rate.
//!
//! The bounds carry constants that are only known to exist. Everything here
//! therefore fits constants from data and tests the *shape* of an envelope
//! (monotonicity, linear growth in `T`, mass exponents), never a number.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laugesen::fit_slope;
use crate::params::{ModelParams, DEGENERACY_TOL};
use crate::solver::{Grid, State, Trajectory};
use crate::stencil::{face_window, h_face, hx};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("no energy bound is stated for m < n + 2 with alpha <= 2n - 3m - 2 (alpha = {alpha}, limit {limit})")]
    OutOfTheorem { alpha: f64, limit: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("theta = {theta} lies outside [{lo}, 1)")]
    ThetaOutOfRange { theta: f64, lo: f64 },
    #[error("trajectory too short to fit a decay rate ({0} usable points)")]
    InsufficientDecay(usize),
}

/// Branch of the energy theorem that applies to a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCase {
    /// `a1 <= 0`: the energy does not increase.
    Stable,
    /// `m > n + 2`: growth controlled by `int int h^(alpha+3m-2n+2)`.
    Supercritical,
    /// `m < n + 2`, `alpha > 2n - 3m - 1`.
    SubcaseA,
    /// `m < n + 2`, `2n - 3m - 2 < alpha <= 2n - 3m - 1`.
    SubcaseB,
    /// `m = n + 2` with small mass.
    Critical,
}

pub fn classify_case(model: &ModelParams) -> Result<BoundCase, EstimateError> {
    let ModelParams { n, m, a1, alpha, .. } = *model;
    if a1 <= 0.0 {
        return Ok(BoundCase::Stable);
    }
    if (m - (n + 2.0)).abs() < DEGENERACY_TOL {
        return Ok(BoundCase::Critical);
    }
    if m > n + 2.0 {
        return Ok(BoundCase::Supercritical);
    }
    let upper = 2.0 * n - 3.0 * m - 1.0;
    if alpha > upper {
        Ok(BoundCase::SubcaseA)
    } else if alpha > upper - 1.0 {
        Ok(BoundCase::SubcaseB)
    } else {
        Err(EstimateError::OutOfTheorem { alpha, limit: upper - 1.0 })
    }
}

/// Trace of the alpha-energy against a fitted envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub case: BoundCase,
    pub times: Vec<f64>,
    pub trace: Vec<f64>,
    pub envelope: Vec<f64>,
    pub slack: f64,
    pub violations: usize,
    /// Fitted constant multiplying the growth term; empty in the stable case.
    pub fitted_constants: Vec<f64>,
    pub mass: f64,
    /// Growth over the whole run is at most twice the rate seen over the
    /// first half, i.e. the trace is no worse than linear in `T`.
    pub at_most_linear: bool,
    pub notes: Vec<String>,
}

/// Default slack `1e-6 max(1, |E(0)|)`.
pub fn default_slack(e0: f64) -> f64 {
    1e-6 * e0.abs().max(1.0)
}

fn energy_trace(traj: &Trajectory) -> (Vec<f64>, Vec<f64>) {
    traj.records.iter().map(|r| (r.t, r.e0_alpha)).unzip()
}

/// Counts steps where the trace rises by more than `slack`.
pub fn monotone_violations(trace: &[f64], slack: f64) -> usize {
    trace.windows(2).filter(|w| w[1] > w[0] + slack).count()
}

/// Non-increase of the alpha-energy for `a1 <= 0`.
pub fn check_monotone_energy(traj: &Trajectory, model: &ModelParams) -> Result<BoundReport, EstimateError> {
    let first = traj.records.first().map(|r| r.e0_alpha).unwrap_or(0.0);
    check_monotone_energy_with_slack(traj, model, default_slack(first))
}

pub fn check_monotone_energy_with_slack(
    traj: &Trajectory,
    model: &ModelParams,
    slack: f64,
) -> Result<BoundReport, EstimateError> {
    if model.a1 > 0.0 {
        return Err(EstimateError::Precondition(format!("monotone check needs a1 <= 0, got {}", model.a1)));
    }
    let mut notes = Vec::new();
    if crate::laugesen::feasible_kappa(model.alpha, model.n).is_none() {
        notes.push(format!("alpha = {} is outside the dissipation region for n = {}", model.alpha, model.n));
    }
    let (times, trace) = energy_trace(traj);
    let e0 = trace.first().copied().unwrap_or(0.0);
    Ok(BoundReport {
        case: BoundCase::Stable,
        envelope: vec![e0; trace.len()],
        violations: monotone_violations(&trace, slack),
        times,
        trace,
        slack,
        fitted_constants: Vec::new(),
        mass: traj.records.first().map(|r| r.mass).unwrap_or(0.0),
        at_most_linear: true,
        notes,
    })
}

/// `sum h_i^p dx`.
fn power_integral(h: &[f64], dx: f64, p: f64) -> f64 {
    h.iter().map(|z| z.powf(p)).sum::<f64>() * dx
}

/// Fits the growth envelope of the branch selected by [`classify_case`].
///
/// Along one run the mass is fixed, so the mass factor of each branch is a
/// known number `g(M)` and the envelope is `E(0) + C g(M) T`. In the
/// supercritical branch the growth term is `C int_0^T int h^q dx dt`,
/// integrated over the stored snapshots.
pub fn check_growth_bound(traj: &Trajectory, model: &ModelParams) -> Result<BoundReport, EstimateError> {
    if model.a1 <= 0.0 {
        return Err(EstimateError::Precondition(format!("growth check needs a1 > 0, got {}", model.a1)));
    }
    let case = classify_case(model)?;
    let ModelParams { n, m, alpha, .. } = *model;
    let q = alpha + 3.0 * m - 2.0 * n + 2.0;
    let mass = traj.records.first().map(|r| r.mass).unwrap_or(0.0);
    let mut notes = Vec::new();

    let (times, trace, weight) = match case {
        BoundCase::Supercritical => {
            let dx = traj.grid.dx();
            let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
            let trace: Vec<f64> = traj
                .snapshots
                .iter()
                .map(|s| {
                    traj.records
                        .iter()
                        .find(|r| r.t == s.t)
                        .map(|r| r.e0_alpha)
                        .unwrap_or(f64::NAN)
                })
                .collect();
            let mut acc = 0.0;
            let mut weight = vec![0.0];
            for w in traj.snapshots.windows(2) {
                acc += (w[1].t - w[0].t) * power_integral(&w[1].h, dx, q);
                weight.push(acc);
            }
            notes.push("growth term integrated over stored snapshots".into());
            (times, trace, weight)
        }
        _ => {
            let g = match case {
                BoundCase::SubcaseA => {
                    mass.powf((2.0 * alpha + 5.0 * m - 3.0 * n + 4.0) / (n + 2.0 - m)) + mass.powf(q)
                }
                BoundCase::SubcaseB => mass.powf(q),
                BoundCase::Critical => {
                    notes.push("small-mass threshold is not known; mass recorded only".into());
                    mass.powf(alpha + n + 8.0)
                }
                _ => unreachable!(),
            };
            let (times, trace) = energy_trace(traj);
            let weight = times.iter().map(|t| g * t).collect();
            (times, trace, weight)
        }
    };

    let e0 = trace.first().copied().unwrap_or(0.0);
    let fit = |upto: usize| -> f64 {
        (1..upto.min(trace.len()))
            .filter(|&k| weight[k] > 0.0)
            .map(|k| ((trace[k] - e0) / weight[k]).max(0.0))
            .fold(0.0, f64::max)
    };
    let c = fit(trace.len());
    let t_end = times.last().copied().unwrap_or(0.0);
    let half = times.iter().position(|&t| t > 0.5 * t_end).unwrap_or(times.len());
    let c_half = fit(half + 1);
    let at_most_linear = c <= 2.0 * c_half || c == 0.0;
    let slack = default_slack(e0);
    let envelope: Vec<f64> = weight.iter().map(|w| e0 + c * w).collect();
    let violations = trace.iter().zip(&envelope).filter(|(e, env)| **e > **env + slack).count();
    Ok(BoundReport {
        case,
        times,
        trace,
        envelope,
        slack,
        violations,
        fitted_constants: vec![c],
        mass,
        at_most_linear,
        notes,
    })
}

/// Interpolation exponent
/// `theta = (1/b + i/N - 1/a) / (1/b + j/N - 1/d)`.
///
/// Returns [`EstimateError::ThetaOutOfRange`] when the value falls outside
/// `[i/j, 1)`; the stated preconditions alone do not exclude this.
pub fn gn_theta(a: f64, b: f64, d: f64, i: u32, j: u32, dim: u32) -> Result<f64, EstimateError> {
    if !(a > 1.0 && b > 0.0 && b < a && d > 1.0 && i < j && dim >= 1) {
        return Err(EstimateError::Precondition(format!(
            "need a > 1, 0 < b < a, d > 1, 0 <= i < j, N >= 1; got a={a}, b={b}, d={d}, i={i}, j={j}, N={dim}"
        )));
    }
    let nn = dim as f64;
    let theta = (1.0 / b + i as f64 / nn - 1.0 / a) / (1.0 / b + j as f64 / nn - 1.0 / d);
    let lo = i as f64 / j as f64;
    if theta >= lo && theta < 1.0 {
        Ok(theta)
    } else {
        Err(EstimateError::ThetaOutOfRange { theta, lo })
    }
}

/// The three integrals of the Hölder step and the gap
/// `I2^(2/3) I3^(1/3) - I1 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub residual: f64,
}

/// Face-based sums of `h^(alpha+m-2) h_x^4`, `h^(alpha+n-4) h_x^6` and
/// `h^(alpha+3m-2n+2)`, all on the same face nodes so the discrete Hölder
/// inequality holds exactly.
pub fn check_holder_step(state: &State, grid: &Grid, model: &ModelParams) -> HolderCheck {
    let ModelParams { n, m, alpha, .. } = *model;
    let dx = grid.dx();
    let (mut i1, mut i2, mut i3) = (0.0, 0.0, 0.0);
    for i in 0..state.h.len() {
        let w = face_window(&state.h, i);
        let (g, hf) = (hx(&w, dx), h_face(&w));
        let g2 = g * g;
        i1 += hf.powf(alpha + m - 2.0) * g2 * g2;
        i2 += hf.powf(alpha + n - 4.0) * g2 * g2 * g2;
        i3 += hf.powf(alpha + 3.0 * m - 2.0 * n + 2.0);
    }
    let (i1, i2, i3) = (i1 * dx, i2 * dx, i3 * dx);
    HolderCheck { i1, i2, i3, residual: i2.powf(2.0 / 3.0) * i3.powf(1.0 / 3.0) - i1 }
}

/// Power-law fit `||h - mean||_inf ~ C (1 + t)^(-p)` on the late window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c: f64,
    /// `f64::INFINITY` when the deviation reaches roundoff inside the
    /// window, i.e. faster than any power.
    pub p: f64,
    pub window_start: f64,
    pub points: usize,
    pub passes: bool,
    pub notes: Vec<String>,
}

/// Target decay exponent.
pub const DECAY_EXPONENT: f64 = 0.25;

/// Fits the decay exponent over the last half of the run in `log(1 + t)`.
pub fn decay_diagnostic(traj: &Trajectory, model: &ModelParams) -> Result<DecayFit, EstimateError> {
    if model.a1 > 0.0 {
        return Err(EstimateError::Precondition(format!("decay fit needs a1 <= 0, got {}", model.a1)));
    }
    let mut notes = Vec::new();
    let (n, alpha) = (model.n, model.alpha);
    if !((n - 4.0) / 2.0 <= alpha && alpha < 0.0) {
        notes.push(format!("alpha = {alpha} lies outside the decay statement's range [(n-4)/2, 0)"));
    }
    if n < 1.5 {
        notes.push("for n < 3/2 the decay statement's alpha range lies outside the energy theorem's range".into());
    }
    let t_end = traj.records.last().map(|r| r.t).unwrap_or(0.0);
    let start = (0.5 * (1.0 + t_end).ln()).exp() - 1.0;
    let mean_scale = traj.records.first().map(|r| r.mass).unwrap_or(0.0) / traj.grid.length();
    let floor = 1e-11 * mean_scale.max(1e-300);
    let window: Vec<(f64, f64)> =
        traj.records.iter().filter(|r| r.t >= start && r.t > 0.0).map(|r| (r.t, r.sup_dev)).collect();

    if traj.records.iter().all(|r| r.sup_dev <= floor) {
        return Ok(DecayFit { c: 0.0, p: f64::INFINITY, window_start: start, points: window.len(), passes: true, notes });
    }
    if window.len() < 3 {
        return Err(EstimateError::InsufficientDecay(window.len()));
    }
    let usable: Vec<(f64, f64)> = window
        .iter()
        .filter(|(_, d)| *d > floor)
        .map(|&(t, d)| ((1.0 + t).ln(), d.ln()))
        .collect();
    if usable.len() < 3 {
        notes.push("deviation reached roundoff inside the fit window".into());
        let c = window.iter().map(|(t, d)| d * (1.0 + t).powf(DECAY_EXPONENT)).fold(0.0, f64::max);
        return Ok(DecayFit { c, p: f64::INFINITY, window_start: start, points: usable.len(), passes: true, notes });
    }
    let slope = fit_slope(&usable).ok_or(EstimateError::InsufficientDecay(usable.len()))?;
    let k = usable.len() as f64;
    let intercept = usable.iter().map(|p| p.1 - slope * p.0).sum::<f64>() / k;
    let p = -slope;
    Ok(DecayFit {
        c: intercept.exp(),
        p,
        window_start: start,
        points: usable.len(),
        passes: p >= DECAY_EXPONENT,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(n: f64, m: f64, a1: f64, alpha: f64) -> ModelParams {
        ModelParams { n, m, a1, alpha, beta_ent: 0.0, kappa: None }
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_case(&model(1.0, 5.0, -1.0, 0.3)).unwrap(), BoundCase::Stable);
        assert_eq!(classify_case(&model(1.0, 3.0, 1.0, 0.0)).unwrap(), BoundCase::Critical);
        assert_eq!(classify_case(&model(1.0, 2.0, 1.0, 0.0)).unwrap(), BoundCase::SubcaseA);
        assert_eq!(classify_case(&model(1.0, 4.0, 1.0, 0.0)).unwrap(), BoundCase::Supercritical);
        // 2n - 3m - 1 = 0.5 - 0.6 - 1 = -1.1 at n = 0.25, m = 0.2
        assert_eq!(classify_case(&model(0.25, 0.2, 1.0, -1.5)).unwrap(), BoundCase::SubcaseB);
        assert!(matches!(
            classify_case(&model(0.25, 0.2, 1.0, -2.5)),
            Err(EstimateError::OutOfTheorem { .. })
        ));
    }

    #[test]
    fn theta_examples() {
        assert!((gn_theta(2.0, 1.0, 2.0, 0, 1, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(gn_theta(1.0 + 1e-9, 1.0, 2.0, 0, 1, 1).unwrap() < 1e-8);
        let (alpha, n, m) = (0.0, 1.0, 2.0);
        let p = alpha + n + 2.0;
        let a = 6.0 * (alpha + 3.0 * m - 2.0 * n + 2.0) / p;
        let theta = gn_theta(a, 6.0 / p, 6.0, 0, 1, 1).unwrap();
        assert!((theta * a / 6.0 - 5.0 / 8.0).abs() < 1e-15);
        assert!(matches!(gn_theta(10.0, 9.0, 100.0, 1, 2, 1), Err(EstimateError::ThetaOutOfRange { .. })));
        assert!(matches!(gn_theta(0.5, 0.1, 2.0, 0, 1, 1), Err(EstimateError::Precondition(_))));
    }

    #[test]
    fn holder_examples() {
        let grid = Grid::new(std::f64::consts::PI, 64);
        let m = model(1.0, 2.0, 0.0, 0.0);
        let flat = check_holder_step(&State::new(0.0, vec![1.0; 64]), &grid, &m);
        assert_eq!((flat.i1, flat.i2, flat.residual), (0.0, 0.0, 0.0));
        let bumpy = State::new(0.0, grid.sample(|x| 1.0 + 0.5 * x.cos()));
        assert!(check_holder_step(&bumpy, &grid, &m).residual >= 0.0);
        // |h_x| proportional to the face height when m = n: a geometric tent
        let r: f64 = 1.05;
        let h: Vec<f64> = (0..64).map(|i: i32| r.powi(i.min(64 - i))).collect();
        let eq = check_holder_step(&State::new(0.0, h), &grid, &model(1.0, 1.0, 0.0, 0.0));
        assert!(eq.residual.abs() <= 1e-12 * eq.i1, "{eq:?}");
    }

    #[test]
    fn violations_counting() {
        assert_eq!(monotone_violations(&[3.0, 2.0, 2.0, 1.0], 0.0), 0);
        assert_eq!(monotone_violations(&[3.0, 3.1, 2.0, 2.05], 0.06), 1);
    }
}
