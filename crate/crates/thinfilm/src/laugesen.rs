//! Coefficient algebra of the sum-of-squares energy decomposition and the
//! `(n, alpha)` dissipation region.
//!
//! The time derivative of the alpha-energy is
//!
//! `-R^2 - 2 alpha RS - alpha (alpha - 1)/2 RL`
//!
//! and, after two integrations by parts, for every real `kappa`,
//!
//! `-(R + alpha S + kappa L)^2 + beta (S + (alpha+n-3)/5 L)^2 + gamma L^2
//!  + mu N^2 + eps k1 I1 + eps^2 k2 I2`.
//!
//! The energy dissipates when some `kappa` makes `beta <= 0` and
//! `gamma <= 0`. This module evaluates the coefficients, solves for the
//! admissible `kappa`, rasterizes the region, and checks both identities
//! numerically on smooth periodic profiles.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functionals::eps_term;
use crate::regfuncs::{dpp_eps_raw, f_eps_prime_raw, f_eps_raw};
use crate::solver::Grid;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaugesenError {
    #[error("resolution must be at least 2 per axis, got {0}")]
    Resolution(usize),
    #[error("invalid range [{0}, {1}]")]
    Range(f64, f64),
    #[error("test profile is not positive (min {0})")]
    NonPositiveProfile(f64),
    #[error("quadrature produced a non-finite value")]
    QuadratureFailure,
    #[error("need at least two positive samples for a slope fit")]
    TooFewSamples,
}

/// The five decomposition coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompCoeffs {
    pub beta_c: f64,
    pub gamma_c: f64,
    pub mu_c: f64,
    pub k1: f64,
    pub k2: f64,
}

/// Coefficients as functions of `(alpha, n, s, a1, kappa)`.
pub fn coeffs(alpha: f64, n: f64, s: f64, a1: f64, kappa: f64) -> DecompCoeffs {
    let p = alpha + n - 3.0;
    let q = alpha - (2.0 * n - 1.0) / 3.0;
    let beta_c = alpha / 2.0 * (5.0 * alpha - 3.0) - 6.0 * kappa;
    let gamma_c = kappa * kappa - 6.0 / 25.0 * kappa * p * q - 3.0 / 50.0 * alpha * p * q;
    let mu_c = a1 * (2.0 * kappa - alpha / 2.0 * (alpha - 1.0));
    let k1 = 2.0 / 25.0
        * (s - n)
        * (5.0 * kappa * (alpha - s + 3.0 * n - 5.0)
            + 5.0 * alpha / 4.0 * (alpha - 1.0) * (s - 2.0 * alpha - 3.0 * n + 5.0)
            + p * (alpha / 2.0 * (5.0 * alpha - 3.0) - 6.0 * kappa));
    let k2 = 1.0 / 5.0 * (s - n) * (s - n) * (4.0 * kappa - alpha * (alpha - 1.0));
    DecompCoeffs { beta_c, gamma_c, mu_c, k1, k2 }
}

/// Closed interval of admissible `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaInterval {
    pub lo: f64,
    pub hi: f64,
}

impl KappaInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, kappa: f64) -> bool {
        self.lo <= kappa && kappa <= self.hi
    }
}

/// Roots of `gamma(kappa) = kappa^2 + b kappa + c`, ascending, or `None`
/// when `gamma > 0` everywhere.
fn gamma_roots(alpha: f64, n: f64) -> Option<(f64, f64)> {
    let p = alpha + n - 3.0;
    let q = alpha - (2.0 * n - 1.0) / 3.0;
    let b = -6.0 / 25.0 * p * q;
    let c = -3.0 / 50.0 * alpha * p * q;
    let mut disc = b * b - 4.0 * c;
    // a double root computed with a rounding-level negative discriminant
    if disc < 0.0 && disc > -1e-15 * (b * b + 4.0 * c.abs()) {
        disc = 0.0;
    }
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // q = -(b + sign(b) sqrt(disc)) / 2 avoids cancellation
    let big = -0.5 * (b + b.signum() * sq);
    if big == 0.0 {
        return Some((0.0, 0.0));
    }
    let (r1, r2) = (big, c / big);
    Some((r1.min(r2), r1.max(r2)))
}

/// `kappa` with `beta <= 0` and `gamma <= 0`, or `None` when no such
/// `kappa` exists.
pub fn feasible_kappa(alpha: f64, n: f64) -> Option<KappaInterval> {
    let beta_floor = alpha * (5.0 * alpha - 3.0) / 12.0;
    let (r1, r2) = gamma_roots(alpha, n)?;
    // adding 0.0 turns a signed zero root into +0
    let (lo, r2) = (beta_floor.max(r1) + 0.0, r2 + 0.0);
    if lo <= r2 {
        Some(KappaInterval { lo, hi: r2 })
    } else if lo - r2 <= 1e-15 * lo.abs().max(1.0) {
        Some(KappaInterval { lo: r2, hi: r2 })
    } else {
        None
    }
}

/// Width below which a feasible interval is reported as marginal.
pub const MARGINAL_WIDTH: f64 = 1e-12;

/// Verdict for one point of the `(n, alpha)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionResult {
    pub n: f64,
    pub alpha: f64,
    pub feasible: bool,
    pub kappa_interval: Option<KappaInterval>,
    /// Feasible with an interval of width at most [`MARGINAL_WIDTH`].
    pub marginal: bool,
    /// Some feasible `kappa` has `2 kappa >= alpha (alpha - 1) / 2`, so
    /// `mu <= 0` whenever `a1 <= 0`.
    pub mu_flag: bool,
    /// Inside the ranges the energy theorem states: `0 <= alpha < 1` for
    /// `1/2 < n < 3`, or `3/2 - n < alpha < 0` for `3/2 < n < 3`.
    pub in_theorem_range: bool,
}

pub fn in_theorem_range(n: f64, alpha: f64) -> bool {
    let upper = n > 0.5 && n < 3.0 && (0.0..1.0).contains(&alpha);
    let lower = n > 1.5 && n < 3.0 && alpha < 0.0 && alpha > 1.5 - n;
    upper || lower
}

pub fn region_point(n: f64, alpha: f64) -> RegionResult {
    let interval = feasible_kappa(alpha, n);
    let mu_threshold = alpha * (alpha - 1.0) / 4.0;
    RegionResult {
        n,
        alpha,
        feasible: interval.is_some(),
        kappa_interval: interval,
        marginal: interval.is_some_and(|iv| iv.width() <= MARGINAL_WIDTH),
        mu_flag: interval.is_some_and(|iv| iv.hi >= mu_threshold),
        in_theorem_range: in_theorem_range(n, alpha),
    }
}

/// Rasterized region with its outline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionScan {
    pub n_values: Vec<f64>,
    pub alpha_values: Vec<f64>,
    /// Row-major in `n`: entry `i * alpha_values.len() + j` is
    /// `(n_values[i], alpha_values[j])`.
    pub points: Vec<RegionResult>,
    /// Closed outline: the upper edge by increasing `n`, then the lower edge
    /// by decreasing `n`.
    pub boundary: Vec<(f64, f64)>,
    /// Samples of the reference line `alpha = 3/2 - n` inside the window.
    pub reference_line: Vec<(f64, f64)>,
}

impl RegionScan {
    pub fn get(&self, i: usize, j: usize) -> &RegionResult {
        &self.points[i * self.alpha_values.len() + j]
    }

    pub fn feasible_count(&self) -> usize {
        self.points.iter().filter(|p| p.feasible).count()
    }

    /// Points that fail [`RegionResult::mu_flag`] although feasible.
    pub fn mu_counterexamples(&self) -> Vec<&RegionResult> {
        self.points.iter().filter(|p| p.feasible && !p.mu_flag).collect()
    }
}

/// `count` equally spaced values with exact endpoints.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let last = (count - 1) as f64;
    (0..count).map(|i| lo + (hi - lo) * (i as f64) / last).collect()
}

pub fn region_scan(
    n_range: (f64, f64),
    alpha_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<RegionScan, LaugesenError> {
    for &r in [resolution.0, resolution.1].iter() {
        if r < 2 {
            return Err(LaugesenError::Resolution(r));
        }
    }
    for &(lo, hi) in [n_range, alpha_range].iter() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(LaugesenError::Range(lo, hi));
        }
    }
    let n_values = linspace(n_range.0, n_range.1, resolution.0);
    let alpha_values = linspace(alpha_range.0, alpha_range.1, resolution.1);
    let points: Vec<RegionResult> = n_values
        .par_iter()
        .flat_map_iter(|&n| alpha_values.iter().map(move |&alpha| region_point(n, alpha)))
        .collect();

    let columns: Vec<(f64, f64, f64)> = n_values
        .iter()
        .enumerate()
        .filter_map(|(i, &n)| {
            let col = &points[i * alpha_values.len()..(i + 1) * alpha_values.len()];
            let mut feasible = col.iter().filter(|p| p.feasible).map(|p| p.alpha);
            let first = feasible.next()?;
            let (lo, hi) = feasible.fold((first, first), |(lo, hi), a| (lo.min(a), hi.max(a)));
            Some((n, lo, hi))
        })
        .collect();
    let mut boundary: Vec<(f64, f64)> = columns.iter().map(|&(n, _, hi)| (n, hi)).collect();
    boundary.extend(columns.iter().rev().map(|&(n, lo, _)| (n, lo)));
    if let Some(&start) = boundary.first() {
        boundary.push(start);
    }
    let reference_line = n_values
        .iter()
        .map(|&n| (n, 1.5 - n))
        .filter(|&(_, a)| a >= alpha_range.0 && a <= alpha_range.1)
        .collect();
    Ok(RegionScan { n_values, alpha_values, points, boundary, reference_line })
}

/// Smooth positive `2 pi`-periodic test profile
/// `mean + sum_k (a_k cos kx + b_k sin kx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigProfile {
    pub mean: f64,
    /// `(k, a_k, b_k)`.
    pub modes: Vec<(u32, f64, f64)>,
}

impl TrigProfile {
    /// `2 + sin x`.
    pub fn standard() -> Self {
        TrigProfile { mean: 2.0, modes: vec![(1, 0.0, 1.0)] }
    }

    pub fn constant(c: f64) -> Self {
        TrigProfile { mean: c, modes: Vec::new() }
    }

    /// Mean in `[1.5, 3]`, up to three modes, total amplitude at most 60% of
    /// the mean.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mean = rng.gen_range(1.5..3.0);
        let count = rng.gen_range(1..=3u32);
        let mut modes: Vec<(u32, f64, f64)> = (1..=count)
            .map(|k| (k, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let total: f64 = modes.iter().map(|&(_, a, b)| a.abs() + b.abs()).sum();
        let scale = rng.gen_range(0.1..0.6) * mean / total.max(f64::MIN_POSITIVE);
        for m in &mut modes {
            m.1 *= scale;
            m.2 *= scale;
        }
        TrigProfile { mean, modes }
    }

    /// `[h, h_x, h_xx, h_xxx]` at `x`.
    pub fn eval(&self, x: f64) -> [f64; 4] {
        let mut out = [self.mean, 0.0, 0.0, 0.0];
        for &(k, a, b) in &self.modes {
            let k = k as f64;
            let (s, c) = (k * x).sin_cos();
            out[0] += a * c + b * s;
            out[1] += k * (-a * s + b * c);
            out[2] += -k * k * (a * c + b * s);
            out[3] += k * k * k * (a * s - b * c);
        }
        out
    }

    /// Lower bound `mean - sum |a_k| + |b_k|`.
    pub fn lower_bound(&self) -> f64 {
        self.mean - self.modes.iter().map(|&(_, a, b)| a.abs() + b.abs()).sum::<f64>()
    }
}

/// Exponents and coefficients entering the identity checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityParams {
    pub alpha: f64,
    pub n: f64,
    /// Only enters through `D''_eps`.
    pub m: f64,
    pub s: f64,
    pub eps: f64,
    pub a1: f64,
}

/// Every inner product the two identities need.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Integrals {
    r2: f64,
    rs: f64,
    rl: f64,
    sl: f64,
    s2: f64,
    l2: f64,
    n2: f64,
    /// `int h^(alpha-3) f' h_x^6`.
    fprime6: f64,
    /// `int h^(alpha-s-3) f^2 h_x^4 h_xx`.
    j: f64,
    i1: f64,
    i2: f64,
}

const INTEGRAL_COUNT: usize = 11;

fn densities(p: &IdentityParams, profile: &TrigProfile, x: f64, kappa: f64) -> [f64; 13] {
    let [h, hx, hxx, hxxx] = profile.eval(x);
    let IdentityParams { alpha, n, m, s, eps, a1 } = *p;
    let f = f_eps_raw(h, n, s, eps);
    let fp = f_eps_prime_raw(h, n, s, eps);
    let dpp = dpp_eps_raw(h, m, n, eps);
    let q = hxxx + a1 * dpp * hx;
    let w = h.powf(alpha) * f;
    let (hx2, hx3) = (hx * hx, hx * hx * hx);
    let (r, sq, l) = (q, hx * hxx / h, hx3 / (h * h));
    let full = r + alpha * sq + kappa * l;
    let partial = sq + (alpha + n - 3.0) / 5.0 * l;
    [
        w * q * q,
        w / h * hx * hxx * q,
        w / (h * h) * hx3 * q,
        w / (h * h * h) * hx2 * hx2 * hxx,
        w / (h * h) * hx2 * hxx * hxx,
        w / (h * h * h * h) * hx3 * hx3,
        w / (h * h) * dpp * hx2 * hx2,
        h.powf(alpha - 3.0) * fp * hx3 * hx3,
        h.powf(alpha - s - 3.0) * f * f * hx2 * hx2 * hxx,
        h.powf(alpha - s - 4.0) * f * f * hx3 * hx3,
        h.powf(alpha - 2.0 * s - 4.0) * f * f * f * hx3 * hx3,
        w * full * full,
        w * partial * partial,
    ]
}

fn integrate_all(
    p: &IdentityParams,
    profile: &TrigProfile,
    kappa: f64,
    nodes: usize,
) -> Result<(Integrals, f64, f64), LaugesenError> {
    let lb = profile.lower_bound();
    if lb <= 0.0 {
        return Err(LaugesenError::NonPositiveProfile(lb));
    }
    // periodic trapezoid rule, unrolled over all densities at once
    let mut sums = [0.0; INTEGRAL_COUNT + 2];
    let lo = -std::f64::consts::PI;
    let hi = std::f64::consts::PI;
    let dx = (hi - lo) / nodes as f64;
    for i in 0..nodes {
        let d = densities(p, profile, lo + i as f64 * dx, kappa);
        for (acc, v) in sums.iter_mut().zip(d) {
            *acc += v;
        }
    }
    for v in &mut sums {
        *v *= dx;
        if !v.is_finite() {
            return Err(LaugesenError::QuadratureFailure);
        }
    }
    let ints = Integrals {
        r2: sums[0],
        rs: sums[1],
        rl: sums[2],
        sl: sums[3],
        s2: sums[4],
        l2: sums[5],
        n2: sums[6],
        fprime6: sums[7],
        j: sums[8],
        i1: sums[9],
        i2: sums[10],
    };
    Ok((ints, sums[11], sums[12]))
}

fn relative(diffs: &[f64], terms: &[f64]) -> f64 {
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    let worst = diffs.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

/// Residuals of the two integration-by-parts chains, each normalized by the
/// sum of the magnitudes of the terms involved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbpResiduals {
    pub h4: f64,
    pub h5: f64,
}

/// Checks the `SL` and `RL` identities on `profile` using `nodes`
/// trapezoid points on `(-pi, pi)`.
pub fn verify_ibp(p: &IdentityParams, profile: &TrigProfile, nodes: usize) -> Result<IbpResiduals, LaugesenError> {
    let (v, _, _) = integrate_all(p, profile, 0.0, nodes)?;
    let IdentityParams { alpha, n, s, eps, a1, .. } = *p;
    let sn = s - n;

    let h4_mid = -(alpha - 3.0) / 5.0 * v.l2 - v.fprime6 / 5.0;
    let h4_end = -(alpha + n - 3.0) / 5.0 * v.l2 - eps * sn / 5.0 * v.i1;
    let h4 = relative(
        &[v.sl - h4_mid, v.sl - h4_end],
        &[v.sl, (alpha - 3.0) / 5.0 * v.l2, v.fprime6 / 5.0, (alpha + n - 3.0) / 5.0 * v.l2, eps * sn / 5.0 * v.i1],
    );

    let t_sl = -(alpha + n - 2.0) * v.sl;
    let t_j = -eps * sn * v.j;
    let t_s = -3.0 * v.s2;
    let t_n = a1 * v.n2;
    let t_l = (alpha + n - 2.0) * (alpha + n - 3.0) / 5.0 * v.l2;
    let t_i1_mid = eps * sn * (alpha + n - 2.0) / 5.0 * v.i1;
    let t_i1_end = eps * sn * (2.0 * alpha + 3.0 * n - s - 5.0) / 5.0 * v.i1;
    let t_i2 = 2.0 / 5.0 * eps * eps * sn * sn * v.i2;
    let e1 = t_sl + t_j + t_s + t_n;
    let e2 = t_l + t_s + t_n + t_j + t_i1_mid;
    let e3 = t_l + t_s + t_n + t_i1_end + t_i2;
    let h5 = relative(
        &[v.rl - e1, v.rl - e2, v.rl - e3],
        &[v.rl, t_sl, t_j, t_s, t_n, t_l, t_i1_mid, t_i1_end, t_i2],
    );
    Ok(IbpResiduals { h4, h5 })
}

/// Relative residual between the direct energy derivative
/// `-R^2 - 2 alpha RS - alpha (alpha-1)/2 RL` and its sum-of-squares form
/// at the given `kappa`. Both squares are integrated directly.
pub fn verify_decomposition(
    p: &IdentityParams,
    kappa: f64,
    profile: &TrigProfile,
    nodes: usize,
) -> Result<f64, LaugesenError> {
    let (v, full_sq, partial_sq) = integrate_all(p, profile, kappa, nodes)?;
    let IdentityParams { alpha, n, s, eps, a1, .. } = *p;
    let c = coeffs(alpha, n, s, a1, kappa);
    let lhs_terms = [-v.r2, -2.0 * alpha * v.rs, -alpha * (alpha - 1.0) / 2.0 * v.rl];
    let rhs_terms = [
        -full_sq,
        c.beta_c * partial_sq,
        c.gamma_c * v.l2,
        c.mu_c * v.n2,
        eps * c.k1 * v.i1,
        eps * eps * c.k2 * v.i2,
    ];
    let lhs: f64 = lhs_terms.iter().sum();
    let rhs: f64 = rhs_terms.iter().sum();
    let all: Vec<f64> = lhs_terms.iter().chain(&rhs_terms).copied().collect();
    Ok(relative(&[lhs - rhs], &all))
}

/// Frozen-state sweep of the eps-remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsSweep {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub expected: f64,
}

/// Cusp-shaped frozen state `floor + |x|^(5/(n+2))` on `(-pi, pi)`; its
/// `L` density is just integrable at the tip, which is where the
/// remainder concentrates as `eps -> 0`.
pub fn cusp_state(n: f64, cells: usize, floor: f64) -> Vec<f64> {
    let grid = Grid::new(std::f64::consts::PI, cells);
    grid.sample(|x| floor + x.abs().powf(5.0 / (n + 2.0)))
}

/// Least-squares slope of `log |eps_term|` against `log eps` on `state`,
/// with `kappa = alpha (alpha-1)/4` so the `eps^2` term vanishes.
pub fn eps_scaling_sweep(
    alpha: f64,
    n: f64,
    s: f64,
    eps_values: &[f64],
    state: &[f64],
    dx: f64,
) -> Result<EpsSweep, LaugesenError> {
    let kappa = alpha * (alpha - 1.0) / 4.0;
    let values: Vec<f64> =
        eps_values.iter().map(|&eps| eps_term(state, dx, alpha, n, s, eps, kappa).abs()).collect();
    let pts: Vec<(f64, f64)> = eps_values
        .iter()
        .zip(&values)
        .filter(|(e, v)| **e > 0.0 && **v > 0.0 && v.is_finite())
        .map(|(e, v)| (e.ln(), v.ln()))
        .collect();
    let slope = fit_slope(&pts).ok_or(LaugesenError::TooFewSamples)?;
    Ok(EpsSweep { eps: eps_values.to_vec(), values, slope, expected: alpha / (s - n) })
}

/// Residual tolerance of the identity suite, relative to term magnitudes.
pub const IDENTITY_TOL: f64 = 1e-7;
/// Quadrature nodes for the main identity checks.
pub const IDENTITY_NODES: usize = 512;
/// Coarse rule of the node-doubling check; it resolves the integrand
/// bandwidth of the three-mode random profiles.
pub const DOUBLING_BASE: usize = 16;
/// Residuals at or below this level count as converged in the doubling
/// check.
pub const RESIDUAL_FLOOR: f64 = 1e-13;

/// One profile and parameter set of the identity suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCase {
    pub profile: TrigProfile,
    pub params: IdentityParams,
    pub kappas: Vec<f64>,
    pub ibp: IbpResiduals,
    pub decomposition: Vec<f64>,
    /// `(coarse, fine)` residual pairs under node doubling, in the order
    /// `h4`, `h5`, then one decomposition residual per `kappa`.
    pub doubling: Vec<(f64, f64)>,
}

/// Outcome of [`identity_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub seed: u64,
    pub nodes: usize,
    pub tolerance: f64,
    pub cases: Vec<IdentityCase>,
    pub max_residual: f64,
    /// Smallest coarse/fine ratio among pairs above [`RESIDUAL_FLOOR`].
    pub min_shrink: f64,
    pub eps_sweep: EpsSweep,
    pub passed: bool,
    /// Name of the first failing check.
    pub first_failure: Option<String>,
}

/// Parameters drawn for the randomized cases.
pub fn random_identity_params<R: Rng>(rng: &mut R) -> IdentityParams {
    let n = rng.gen_range(0.6..2.9);
    IdentityParams {
        alpha: rng.gen_range(-0.5..0.9),
        n,
        m: rng.gen_range(n / 2.0..n + 3.0),
        s: rng.gen_range(4.0..6.0),
        eps: rng.gen_range(0.0..0.3),
        a1: rng.gen_range(-1.0..1.0),
    }
}

/// Both identities on `2 + sin x` plus `profiles` seeded random profiles,
/// five random `kappa` each, with a node-doubling convergence check, and
/// the eps-scaling sweep on the cusp state.
pub fn identity_suite(seed: u64, profiles: usize) -> Result<IdentityReport, LaugesenError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = vec![(
        TrigProfile::standard(),
        IdentityParams { alpha: 0.2, n: 1.0, m: 2.0, s: 4.0, eps: 0.1, a1: 1.0 },
    )];
    for _ in 0..profiles {
        let profile = TrigProfile::random(&mut rng);
        inputs.push((profile, random_identity_params(&mut rng)));
    }
    let mut first_failure = None;
    let mut fail = |name: String| {
        first_failure.get_or_insert(name);
    };
    let mut cases = Vec::with_capacity(inputs.len());
    let (mut max_residual, mut min_shrink) = (0.0f64, f64::INFINITY);
    for (index, (profile, params)) in inputs.into_iter().enumerate() {
        let kappas: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ibp = verify_ibp(&params, &profile, IDENTITY_NODES)?;
        let decomposition = kappas
            .iter()
            .map(|&k| verify_decomposition(&params, k, &profile, IDENTITY_NODES))
            .collect::<Result<Vec<_>, _>>()?;
        let coarse = verify_ibp(&params, &profile, DOUBLING_BASE)?;
        let fine = verify_ibp(&params, &profile, 2 * DOUBLING_BASE)?;
        let mut doubling = vec![(coarse.h4, fine.h4), (coarse.h5, fine.h5)];
        for &k in &kappas {
            doubling.push((
                verify_decomposition(&params, k, &profile, DOUBLING_BASE)?,
                verify_decomposition(&params, k, &profile, 2 * DOUBLING_BASE)?,
            ));
        }
        let checks = [("first integration by parts", ibp.h4), ("second integration by parts", ibp.h5)]
            .into_iter()
            .chain(decomposition.iter().map(|&r| ("sum-of-squares decomposition", r)));
        for (name, r) in checks {
            max_residual = max_residual.max(r);
            // a NaN residual fails too
            if r.is_nan() || r > IDENTITY_TOL {
                fail(format!("{name}, case {index}: residual {r:e}"));
            }
        }
        for &(c, f) in &doubling {
            if f > RESIDUAL_FLOOR {
                min_shrink = min_shrink.min(c / f);
                if c < 10.0 * f {
                    fail(format!("node doubling, case {index}: {c:e} -> {f:e}"));
                }
            }
        }
        cases.push(IdentityCase { profile, params, kappas, ibp, decomposition, doubling });
    }
    let cells = 2048;
    let state = cusp_state(1.0, cells, 1e-6);
    let dx = Grid::new(std::f64::consts::PI, cells).dx();
    let eps_sweep = eps_scaling_sweep(0.5, 1.0, 4.0, &[1e-1, 1e-2, 1e-3, 1e-4], &state, dx)?;
    if (eps_sweep.slope / eps_sweep.expected - 1.0).abs() > 0.2 {
        fail(format!("eps scaling: slope {} vs {}", eps_sweep.slope, eps_sweep.expected));
    }
    Ok(IdentityReport {
        seed,
        nodes: IDENTITY_NODES,
        tolerance: IDENTITY_TOL,
        cases,
        max_residual,
        min_shrink,
        eps_sweep,
        passed: first_failure.is_none(),
        first_failure,
    })
}

/// Ordinary least-squares slope.
pub(crate) fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coefficient_examples() {
        for n in [0.5, 1.0, 2.5] {
            for a1 in [-1.0, 0.0, 1.0] {
                let c = coeffs(0.0, n, 4.0, a1, 0.0);
                assert_eq!((c.beta_c, c.gamma_c, c.mu_c, c.k2), (0.0, 0.0, 0.0, 0.0));
            }
        }
        let c = coeffs(0.0, 1.0, 4.0, 2.0, 0.3);
        assert_eq!(c.mu_c, 2.0 * 0.3 * 2.0);
        let c = coeffs(0.2, 1.0, 4.0, 0.0, 0.0);
        assert!((c.beta_c + 0.2).abs() < 1e-15);
        assert!((c.gamma_c + 0.00288).abs() < 1e-15);
    }

    #[test]
    fn feasible_examples() {
        let iv = feasible_kappa(0.0, 1.0).unwrap();
        assert_eq!(iv.lo, 0.0);
        assert!((iv.hi - 4.0 / 25.0).abs() < 1e-15);
        let iv = feasible_kappa(0.2, 1.0).unwrap();
        assert!((iv.lo + 0.0321051721941577).abs() < 1e-12);
        assert!((iv.hi - 0.08970517219415769).abs() < 1e-12);
        // gamma = kappa^2 at n = 1/2, alpha = 0: a single admissible point
        let p = region_point(0.5, 0.0);
        assert!(p.feasible && p.marginal);
        assert!(feasible_kappa(0.9, 1.0).is_none());
    }

    #[test]
    fn scan_shape() {
        let scan = region_scan((0.4, 3.1), (-1.0, 1.0), (2, 2)).unwrap();
        assert_eq!(scan.points.len(), 4);
        assert_eq!(scan.get(1, 0).n, 3.1);
        assert!(region_scan((0.0, 1.0), (0.0, 1.0), (1, 5)).is_err());
        let scan = region_scan((0.4, 3.1), (-1.0, 1.0), (28, 21)).unwrap();
        assert!(scan.feasible_count() > 0);
        assert_eq!(scan.boundary.first(), scan.boundary.last());
    }

    #[test]
    fn identities_on_standard_profile() {
        let p = IdentityParams { alpha: 0.5, n: 1.0, m: 2.0, s: 4.0, eps: 0.2, a1: 0.0 };
        let r = verify_ibp(&p, &TrigProfile::standard(), 256).unwrap();
        assert!(r.h4 < 1e-12 && r.h5 < 1e-12, "{r:?}");
        let p = IdentityParams { alpha: 0.2, n: 1.0, m: 2.0, s: 4.0, eps: 0.1, a1: 1.0 };
        for kappa in [0.05, -0.7, 0.9] {
            let r = verify_decomposition(&p, kappa, &TrigProfile::standard(), 256).unwrap();
            assert!(r < 1e-12, "{kappa}: {r}");
        }
        let r = verify_ibp(&p, &TrigProfile::constant(1.5), 16).unwrap();
        assert_eq!((r.h4, r.h5), (0.0, 0.0));
    }

    #[test]
    fn random_profiles_are_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = TrigProfile::random(&mut rng);
            assert!(p.lower_bound() > 0.3 * p.mean);
        }
    }

    #[test]
    fn profile_derivatives() {
        let p = TrigProfile { mean: 2.0, modes: vec![(1, 0.3, -0.2), (3, 0.1, 0.05)] };
        let x = 0.37;
        let step = 1e-5;
        let up = p.eval(x + step);
        let down = p.eval(x - step);
        let here = p.eval(x);
        for d in 0..3 {
            let fd = (up[d] - down[d]) / (2.0 * step);
            assert!((fd - here[d + 1]).abs() < 1e-8, "{d}");
        }
    }

    #[test]
    fn identity_suite_is_deterministic() {
        let a = identity_suite(11, 2).unwrap();
        assert!(a.passed, "{:?}", a.first_failure);
        assert_eq!(a.cases.len(), 3);
        assert_eq!(a, identity_suite(11, 2).unwrap());
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!((fit_slope(&pts).unwrap() - 2.0).abs() < 1e-14);
        assert!(fit_slope(&pts[..1]).is_none());
    }
}
