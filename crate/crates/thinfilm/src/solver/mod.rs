//! Mass-conservative implicit time stepping for the regularized thin-film
//! equation
//!
//! `h_t + ( f_de(h) (h_xxx + a1 D''_e(h) h_x) )_x = 0`
//!
//! on a periodic grid of `N` cells. The flux lives on faces; cell updates are
//! flux differences, so interior contributions telescope around the ring and
//! the discrete mass `sum h_i dx` is preserved by every Newton iterate.
//!
//! Each step solves the backward-Euler system with Newton's method. The
//! Jacobian is assembled analytically and is cyclic pentadiagonal, see
//! [`crate::linalg`].

mod run;

pub use run::{run, Abort, Observer, RunOptions, Trajectory};

use thiserror::Error;

use crate::linalg::{CyclicPentadiagonal, LinalgError};
use crate::params::{MobilityAveraging, RegParams, ValidatedConfig};
use crate::regfuncs::{dpp_eps_prime_raw, dpp_eps_raw, f_eps_prime_raw, f_eps_raw};
use crate::stencil::{self, face_window, wrap, FaceValue};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("initial data must be finite and nonnegative (h0[{index}] = {value})")]
    NegativeInitialData { index: usize, value: f64 },
    #[error("non-positive height h[{index}] = {value}")]
    NonPositiveHeight { index: usize, value: f64 },
    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("positivity lost: h[{index}] = {value} in a Newton iterate")]
    PositivityLost { index: usize, value: f64 },
    #[error("linear solve failed: {0}")]
    Linalg(#[from] LinalgError),
    #[error("analytic Jacobian disagrees with finite differences (max relative error {0:e})")]
    JacobianMismatch(f64),
    #[error("expected {expected} heights, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("observer failed: {0}")]
    Observer(String),
    #[error(transparent)]
    Functional(#[from] crate::functionals::FunctionalError),
}

impl SolverError {
    /// Failures that a smaller time step may cure.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            SolverError::NewtonDiverged { .. } | SolverError::PositivityLost { .. } | SolverError::Linalg(_)
        )
    }
}

/// Uniform periodic grid on `(-a, a)` with node `i` at `-a + i dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub a: f64,
    pub cells: usize,
}

impl Grid {
    pub fn new(a: f64, cells: usize) -> Self {
        Grid { a, cells }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.a / self.cells as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.a + i as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.x(i)).collect()
    }

    pub fn length(&self) -> f64 {
        2.0 * self.a
    }

    /// Samples `f` at the nodes.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.cells).map(|i| f(self.x(i))).collect()
    }
}

/// Film height at time `t`, one value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub h: Vec<f64>,
}

impl State {
    pub fn new(t: f64, h: Vec<f64>) -> Self {
        State { t, h }
    }

    pub fn min(&self) -> f64 {
        self.h.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.h.iter().sum::<f64>() / self.h.len() as f64
    }

    /// Cyclic shift by `k` cells: `out[i] = h[i - k]`.
    pub fn shifted(&self, k: isize) -> State {
        let n = self.h.len();
        let h = (0..n).map(|i| self.h[wrap(i as isize - k, n)]).collect();
        State { t: self.t, h }
    }
}

/// Diagnostics of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub dt: f64,
    pub newton_iterations: usize,
    pub residual: f64,
    /// `sum (h+ - h) dx` for this step.
    pub mass_drift: f64,
}

/// Pointwise lift `h0 + eps^theta`.
pub fn lift_initial_data(h0: &[f64], reg: &RegParams) -> Result<State, SolverError> {
    for (index, &value) in h0.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(SolverError::NegativeInitialData { index, value });
        }
    }
    let lift = if reg.eps > 0.0 { reg.eps.powf(reg.theta) } else { 0.0 };
    let h: Vec<f64> = h0.iter().map(|v| v + lift).collect();
    if let Some((index, &value)) = h.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(SolverError::NonPositiveHeight { index, value });
    }
    Ok(State { t: 0.0, h })
}

pub(crate) fn check_positive(h: &[f64]) -> Result<(), SolverError> {
    match h.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        Some((index, &value)) => Err(SolverError::NonPositiveHeight { index, value }),
        None => Ok(()),
    }
}

/// Flux at one face with derivatives with respect to
/// `[h_{i-1}, h_i, h_{i+1}, h_{i+2}]`.
#[derive(Debug, Clone, Copy)]
struct FaceFlux {
    flux: f64,
    grad: [f64; 4],
}

/// Coefficients of the regularized problem, copied out of the config.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FluxModel {
    pub n: f64,
    pub m: f64,
    pub a1: f64,
    pub s: f64,
    pub eps: f64,
    pub delta: f64,
    pub averaging: MobilityAveraging,
}

impl FluxModel {
    pub fn from_config(config: &ValidatedConfig) -> Self {
        let (model, reg, disc) = (config.model(), config.reg(), config.disc());
        FluxModel {
            n: model.n,
            m: model.m,
            a1: model.a1,
            s: reg.s,
            eps: reg.eps,
            delta: reg.delta,
            averaging: disc.mobility_averaging,
        }
    }

    /// Face mobility from the regularized `f_de` at the two cells.
    pub fn mobility(&self, left: f64, right: f64, with_derivatives: bool) -> FaceValue {
        let (n, s, eps, delta) = (self.n, self.s, self.eps, self.delta);
        stencil::average(
            self.averaging,
            |z| f_eps_raw(z, n, s, eps) + delta,
            |z| f_eps_prime_raw(z, n, s, eps),
            left,
            right,
            with_derivatives,
        )
    }

    /// Face value of `D''_e`: the secant mean between the two cells.
    pub fn second_order_coefficient(&self, left: f64, right: f64, with_derivatives: bool) -> FaceValue {
        let (m, n, eps) = (self.m, self.n, self.eps);
        stencil::secant_mean(
            |z| dpp_eps_raw(z, m, n, eps),
            |z| dpp_eps_prime_raw(z, m, n, eps),
            left,
            right,
            with_derivatives,
        )
    }

    fn face(&self, w: &[f64; 4], dx: f64, with_derivatives: bool) -> FaceFlux {
        let mob = self.mobility(w[1], w[2], with_derivatives);
        let dx3 = dx * dx * dx;
        let mut q = stencil::hxxx(w, dx);
        let mut dq = [-1.0 / dx3, 3.0 / dx3, -3.0 / dx3, 1.0 / dx3];
        if self.a1 != 0.0 {
            let d = self.second_order_coefficient(w[1], w[2], with_derivatives);
            let g = stencil::hx(w, dx);
            q += self.a1 * d.value * g;
            dq[1] += self.a1 * (d.d_left * g - d.value / dx);
            dq[2] += self.a1 * (d.d_right * g + d.value / dx);
        }
        let flux = mob.value * q;
        let grad = [
            mob.value * dq[0],
            mob.d_left * q + mob.value * dq[1],
            mob.d_right * q + mob.value * dq[2],
            mob.value * dq[3],
        ];
        FaceFlux { flux, grad }
    }
}

/// Backward-Euler stepper for one validated configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    config: ValidatedConfig,
    grid: Grid,
    model: FluxModel,
}

impl Solver {
    pub fn new(config: &ValidatedConfig) -> Self {
        let disc = config.disc();
        Solver {
            config: config.clone(),
            grid: Grid::new(disc.a, disc.cells),
            model: FluxModel::from_config(config),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn config(&self) -> &ValidatedConfig {
        &self.config
    }

    fn check_len(&self, h: &[f64]) -> Result<(), SolverError> {
        if h.len() != self.grid.cells {
            return Err(SolverError::SizeMismatch { expected: self.grid.cells, got: h.len() });
        }
        Ok(())
    }

    /// Face fluxes `F_{i+1/2}`, `i = 0..N`.
    pub fn flux(&self, state: &State) -> Result<Vec<f64>, SolverError> {
        self.check_len(&state.h)?;
        check_positive(&state.h)?;
        let dx = self.grid.dx();
        Ok((0..self.grid.cells)
            .map(|i| self.model.face(&face_window(&state.h, i), dx, false).flux)
            .collect())
    }

    /// Backward-Euler residual `h+ - h + dt/dx (F_{i+1/2}(h+) - F_{i-1/2}(h+))`.
    pub fn residual(&self, h_old: &[f64], h_new: &[f64], dt: f64) -> Result<Vec<f64>, SolverError> {
        self.check_len(h_new)?;
        check_positive(h_new)?;
        let dx = self.grid.dx();
        let n = self.grid.cells;
        let fluxes: Vec<f64> = (0..n)
            .map(|i| self.model.face(&face_window(h_new, i), dx, false).flux)
            .collect();
        let c = dt / dx;
        Ok((0..n)
            .map(|i| h_new[i] - h_old[i] + c * (fluxes[i] - fluxes[wrap(i as isize - 1, n)]))
            .collect())
    }

    /// Residual and analytic Jacobian at `h_new`.
    pub fn linearize(
        &self,
        h_old: &[f64],
        h_new: &[f64],
        dt: f64,
    ) -> Result<(Vec<f64>, CyclicPentadiagonal), SolverError> {
        self.check_len(h_new)?;
        check_positive(h_new)?;
        let dx = self.grid.dx();
        let n = self.grid.cells;
        let c = dt / dx;
        let faces: Vec<FaceFlux> = (0..n)
            .map(|i| self.model.face(&face_window(h_new, i), dx, true))
            .collect();
        let mut jac = CyclicPentadiagonal::zeros(n)?;
        let mut r = vec![0.0; n];
        for i in 0..n {
            let right = &faces[i];
            let left = &faces[wrap(i as isize - 1, n)];
            r[i] = h_new[i] - h_old[i] + c * (right.flux - left.flux);
            jac.add(i, 0, 1.0);
            // right face touches cells i-1..i+2, left face cells i-2..i+1
            for (k, g) in right.grad.iter().enumerate() {
                jac.add(i, k as isize - 1, c * g);
            }
            for (k, g) in left.grad.iter().enumerate() {
                jac.add(i, k as isize - 2, -c * g);
            }
        }
        Ok((r, jac))
    }

    /// Max entry error of the analytic Jacobian against central differences,
    /// relative to the largest Jacobian entry.
    pub fn jacobian_check(&self, state: &State, dt: f64) -> Result<f64, SolverError> {
        let (_, jac) = self.linearize(&state.h, &state.h, dt)?;
        let n = self.grid.cells;
        let dx = self.grid.dx();
        let c = dt / dx;
        let local_residual = |h: &[f64], i: usize| -> f64 {
            let right = self.model.face(&face_window(h, i), dx, false).flux;
            let left = self.model.face(&face_window(h, wrap(i as isize - 1, n)), dx, false).flux;
            h[i] - state.h[i] + c * (right - left)
        };
        let mut scale = 0.0f64;
        for i in 0..n {
            for d in -2..=2 {
                scale = scale.max(jac.get(i, d).abs());
            }
        }
        let mut worst = 0.0f64;
        let mut h = state.h.clone();
        for j in 0..n {
            let step = 1e-6 * h[j].abs().max(1e-3);
            let orig = h[j];
            for d in -2isize..=2 {
                let i = wrap(j as isize - d, n);
                h[j] = orig + step;
                let up = local_residual(&h, i);
                h[j] = orig - step;
                let down = local_residual(&h, i);
                h[j] = orig;
                let fd = (up - down) / (2.0 * step);
                worst = worst.max((fd - jac.get(i, d)).abs());
            }
        }
        Ok(worst / scale.max(f64::MIN_POSITIVE))
    }

    /// One backward-Euler step of size `dt`.
    pub fn step(&self, state: &State, dt: f64) -> Result<(State, StepStats), SolverError> {
        self.check_len(&state.h)?;
        check_positive(&state.h)?;
        let disc = self.config.disc();
        let dx = self.grid.dx();
        let mut h = state.h.clone();
        let mut last_residual = f64::INFINITY;
        for iteration in 1..=disc.newton_max_iter {
            let (r, jac) = self.linearize(&state.h, &h, dt)?;
            let res = r.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if !res.is_finite() {
                return Err(SolverError::NewtonDiverged { iterations: iteration, residual: res });
            }
            if res <= disc.newton_tol {
                let mass_drift = (h.iter().sum::<f64>() - state.h.iter().sum::<f64>()) * dx;
                let stats = StepStats { dt, newton_iterations: iteration, residual: res, mass_drift };
                return Ok((State { t: state.t + dt, h }, stats));
            }
            if iteration > 3 && res > 1e3 * last_residual {
                return Err(SolverError::NewtonDiverged { iterations: iteration, residual: res });
            }
            last_residual = res;
            let delta = jac.solve(&r)?;
            for (hi, di) in h.iter_mut().zip(&delta) {
                *hi -= di;
            }
            if let Some((index, &value)) =
                h.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite()))
            {
                return Err(SolverError::PositivityLost { index, value });
            }
        }
        Err(SolverError::NewtonDiverged { iterations: disc.newton_max_iter, residual: last_residual })
    }
}
